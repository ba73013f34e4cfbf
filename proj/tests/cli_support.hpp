#pragma once

// Helpers for driving the wpt executable from tests.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#ifndef WPT_CLI_PATH
#error "WPT_CLI_PATH must name the wpt executable"
#endif

namespace wpt::testing {

/// Runs `wpt <args>` with stdout and stderr sent to `log` (or discarded);
/// returns the exit status, or -1 if the process did not exit normally.
inline int run_cli(const std::string& args, const std::string& log = "") {
    const std::string sink = log.empty() ? std::string("/dev/null") : "'" + log + "'";
    const std::string cmd = std::string("'") + WPT_CLI_PATH + "' " + args + " >" + sink + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

/// Relative path -> file bytes for every regular file under `dir`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
    return out;
}

/// A fresh, empty scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("wpt_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace wpt::testing
