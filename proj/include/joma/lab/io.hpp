#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "joma/core/errors.hpp"

#ifndef JOMA_CODE_VERSION
#define JOMA_CODE_VERSION "unknown"
#endif

namespace joma::lab {

namespace fs = std::filesystem;

inline constexpr const char* output_root_env = "JOMA_OUTPUT_ROOT";

inline std::string code_version() { return JOMA_CODE_VERSION; }

inline fs::path output_root()
{
    const char* env = std::getenv(output_root_env);
    return env && *env ? fs::path(env) : fs::path("runs");
}

inline void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());
}

// Write to a sibling temp file, then rename over the target.
inline void atomic_write(const fs::path& path, std::string_view bytes)
{
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw io_error("cannot open " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os.flush();
        if (!os) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw io_error("cannot rename into " + path.string());
    }
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (is.bad()) throw io_error("read failed: " + path.string());
    return s;
}

} // namespace joma::lab
