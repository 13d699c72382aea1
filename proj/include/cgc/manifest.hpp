#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cgc/error.hpp"

namespace cgc {

// The fixed 3-class label space. The ordinal order below is the class order
// everywhere: reports, model weights, probability printouts.
enum class ClassLabel : int { gangue = 0, matt_coal = 1, gloss_coal = 2 };

inline constexpr int kNumClasses = 3;

inline const char* to_string(ClassLabel c) {
    switch (c) {
        case ClassLabel::gangue: return "gangue";
        case ClassLabel::matt_coal: return "matt_coal";
        case ClassLabel::gloss_coal: return "gloss_coal";
    }
    return "?";
}

inline std::optional<ClassLabel> label_from_string(std::string_view s) {
    if (s == "gangue") return ClassLabel::gangue;
    if (s == "matt_coal") return ClassLabel::matt_coal;
    if (s == "gloss_coal") return ClassLabel::gloss_coal;
    return std::nullopt;
}

inline std::array<ClassLabel, kNumClasses> all_labels() {
    return {ClassLabel::gangue, ClassLabel::matt_coal, ClassLabel::gloss_coal};
}

struct ManifestRecord {
    std::string path;  // relative to the manifest's directory
    ClassLabel label;
};

// Ordered (path,label) records; paths are unique and labels come from the
// fixed class set.
struct DatasetManifest {
    std::vector<ManifestRecord> records;
    std::filesystem::path base_dir;  // directory the relative paths resolve against

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    std::filesystem::path resolve(const ManifestRecord& r) const { return base_dir / r.path; }
    std::filesystem::path resolve(std::size_t i) const { return base_dir / records[i].path; }
};

// CSV with fixed header "path,label", UTF-8, LF line endings.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty manifest " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,label")
        throw FormatError("manifest header must be \"path,label\", got \"" + line + "\"");

    DatasetManifest m;
    m.base_dir = path.parent_path();
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("missing label column at line " + std::to_string(lineno));
        std::string p = line.substr(0, comma);
        std::string lbl = line.substr(comma + 1);
        auto label = label_from_string(lbl);
        if (!label)
            throw FormatError("unknown label \"" + lbl + "\" at line " + std::to_string(lineno));
        if (!seen.insert(p).second)
            throw FormatError("duplicate path \"" + p + "\" at line " + std::to_string(lineno));
        m.records.push_back({std::move(p), *label});
    }
    return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create manifest " + path.string());
    out << "path,label\n";
    for (const auto& r : m.records) out << r.path << ',' << to_string(r.label) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cgc
