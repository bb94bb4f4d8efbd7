#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "olbench/errors.hpp"

namespace olbench {

// Field order in emitted records is part of the file contract; ordered_json
// preserves insertion order.
using ojson = nlohmann::ordered_json;

inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const ojson&, size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw SourceUnavailableError("cannot open: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), lineno, std::string("bad json: ") + e.what());
        }
        fn(j, lineno);
    }
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path) {
        if (!out_) throw Error("cannot open for writing: " + path.string());
    }

    void write(const ojson& j) {
        out_ << j.dump() << '\n';
        if (!out_) throw Error("write failed: " + path_.string());
    }

    void close() { out_.close(); }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline ojson read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SourceUnavailableError("cannot open: " + path.string());
    try {
        return ojson::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": bad json: " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const ojson& j, int indent = 2) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(indent) << '\n';
}

}  // namespace olbench
