#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace forge::log {

// Verbosity is controlled by FORGE_LOG (error|warn|info|debug). It never
// affects results, only what lands on stderr.
enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("FORGE_LOG");
        if (env == nullptr) return Level::Warn;
        if (std::strcmp(env, "error") == 0) return Level::Error;
        if (std::strcmp(env, "info") == 0) return Level::Info;
        if (std::strcmp(env, "debug") == 0) return Level::Debug;
        return Level::Warn;
    }();
    return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
    if (lvl > threshold()) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[forge:%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& msg) { emit(Level::Error, msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, msg); }
inline void info(const std::string& msg) { emit(Level::Info, msg); }
inline void debug(const std::string& msg) { emit(Level::Debug, msg); }

}  // namespace forge::log
