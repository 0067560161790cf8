#include "crowd/io.hpp"

#include <fstream>
#include <sstream>

#include "crowd/error.hpp"

namespace crowd::io {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::InvalidArgument, "io", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::InvalidArgument, "io", "cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error(Errc::InvalidArgument, "io", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, "io", path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text_atomic(path, doc.dump(2) + "\n"); }

}  // namespace crowd::io
