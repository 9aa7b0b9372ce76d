#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace unibi {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void append_all(std::ostringstream&) {}

template <typename T, typename... Rest>
void append_all(std::ostringstream& os, T&& v, Rest&&... rest) {
    os << std::forward<T>(v);
    append_all(os, std::forward<Rest>(rest)...);
}

} // namespace detail

template <typename... Parts>
[[noreturn]] void fail(Parts&&... parts) {
    std::ostringstream os;
    detail::append_all(os, std::forward<Parts>(parts)...);
    throw Error(os.str());
}

template <typename... Parts>
void require(bool cond, Parts&&... parts) {
    if (!cond) fail(std::forward<Parts>(parts)...);
}

// ---------------------------------------------------------------------------
// Logging. Level comes from UNIBI_LOG (error|warn|info|debug); default info.

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("UNIBI_LOG");
        if (!env) return LogLevel::Info;
        std::string_view v(env);
        if (v == "error") return LogLevel::Error;
        if (v == "warn") return LogLevel::Warn;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

template <typename... Parts>
void log(LogLevel level, Parts&&... parts) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::ostringstream os;
    detail::append_all(os, std::forward<Parts>(parts)...);
    std::fprintf(stderr, "[unibi:%s] %s\n", names[static_cast<int>(level)], os.str().c_str());
}

template <typename... P> void log_error(P&&... p) { log(LogLevel::Error, std::forward<P>(p)...); }
template <typename... P> void log_warn(P&&... p)  { log(LogLevel::Warn, std::forward<P>(p)...); }
template <typename... P> void log_info(P&&... p)  { log(LogLevel::Info, std::forward<P>(p)...); }
template <typename... P> void log_debug(P&&... p) { log(LogLevel::Debug, std::forward<P>(p)...); }

// ---------------------------------------------------------------------------

// FNV-1a, used to fingerprint vocabularies in checkpoints.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Fixed formatting for CSV output so repeated runs emit identical bytes.
inline std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace unibi
