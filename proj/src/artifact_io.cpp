#include "funscreen/artifact_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include "funscreen/error.hpp"

namespace fs = std::filesystem;

namespace funscreen {

namespace {

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Splits "key = value"; returns false for blank and '#' comment lines.
bool split_kv(const std::string& line, std::string& key, std::string& value) {
    std::string s = line;
    const auto trim = [](std::string& t) {
        const auto b = t.find_first_not_of(" \t\r");
        const auto e = t.find_last_not_of(" \t\r");
        t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
    };
    trim(s);
    if (s.empty() || s[0] == '#') return false;
    const auto eq = s.find('=');
    if (eq == std::string::npos) return false;
    key = s.substr(0, eq);
    value = s.substr(eq + 1);
    trim(key);
    trim(value);
    return !key.empty();
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (got < sizeof buf) break;
    }
    return h;
}

ArtifactSet::ArtifactSet(std::string directory) : dir_(std::move(directory)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_))
        throw IoError("cannot create output directory " + dir_);
}

std::string ArtifactSet::path(const std::string& name) const {
    return (fs::path(dir_) / name).string();
}

void ArtifactSet::add(const std::string& name) { names_.push_back(name); }

void ArtifactSet::record(const std::string& key, const std::string& value) {
    records_.push_back({key, value});
}

void ArtifactSet::write_manifest() {
    // Expand registered directories into their files, sorted for stable
    // manifests.
    std::vector<std::string> files;
    for (const auto& name : names_) {
        const fs::path p = path(name);
        if (fs::is_directory(p)) {
            std::vector<std::string> inner;
            for (const auto& entry : fs::recursive_directory_iterator(p))
                if (entry.is_regular_file())
                    inner.push_back(fs::relative(entry.path(), dir_).generic_string());
            std::sort(inner.begin(), inner.end());
            files.insert(files.end(), inner.begin(), inner.end());
        } else {
            files.push_back(name);
        }
    }

    const std::string manifest_path = path("manifest.txt");
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + manifest_path);
    out << "# funscreen run manifest\n";
    for (const auto& [k, v] : records_) out << k << " = " << v << "\n";
    for (const auto& f : files)
        out << "artifact." << f << ".fnv1a64 = " << hex16(fnv1a64_file(path(f))) << "\n";
    out.flush();
    if (!out.good()) throw IoError("cannot write " + manifest_path);
}

void ArtifactSet::cleanup() noexcept {
    std::error_code ec;
    for (const auto& name : names_) fs::remove_all(path(name), ec);
    fs::remove(path("manifest.txt"), ec);
}

ManifestCheck ArtifactSet::verify_manifest(const std::string& directory) {
    ManifestCheck check;
    const fs::path manifest = fs::path(directory) / "manifest.txt";
    std::ifstream in(manifest, std::ios::binary);
    if (!in) return check;
    check.found = true;

    std::string line, key, value;
    while (std::getline(in, line)) {
        if (!split_kv(line, key, value)) continue;
        if (key.rfind("artifact.", 0) != 0) continue;
        const std::string suffix = ".fnv1a64";
        if (key.size() <= 9 + suffix.size() ||
            key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        const std::string name = key.substr(9, key.size() - 9 - suffix.size());
        ++check.checked;
        const std::string file = (fs::path(directory) / name).string();
        try {
            if (hex16(fnv1a64_file(file)) != value)
                check.problems.push_back(name + ": checksum mismatch");
        } catch (const IoError&) {
            check.problems.push_back(name + ": missing");
        }
    }
    return check;
}

}  // namespace funscreen
