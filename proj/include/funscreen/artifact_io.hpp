#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace funscreen {

// 64-bit FNV-1a over a byte range.
std::uint64_t fnv1a64(const void* data, std::size_t len) noexcept;

// Hash of a file's full contents; IoError when the file cannot be read.
std::uint64_t fnv1a64_file(const std::string& path);

// Result of checking a directory's manifest against the files on disk.
struct ManifestCheck {
    bool found = false;          // a manifest.txt was present
    std::size_t checked = 0;     // artifacts listed in it
    std::vector<std::string> problems;  // "name: missing" / "name: checksum mismatch"
};

// Tracks one run's output files so the manifest can record their checksums
// and a failed run can remove everything it touched. Artifact names are
// paths relative to the directory; register each name before writing the
// file so cleanup catches partial writes.
class ArtifactSet {
public:
    // Creates the directory (and parents) when missing.
    explicit ArtifactSet(std::string directory);

    const std::string& directory() const noexcept { return dir_; }
    std::string path(const std::string& name) const;

    void add(const std::string& name);
    void record(const std::string& key, const std::string& value);

    // Writes manifest.txt: the recorded key = value lines in insertion
    // order, then one "artifact.<name>.fnv1a64 = <16 hex digits>" line per
    // registered file. Registered names that are directories contribute one
    // line per regular file inside, in sorted order.
    void write_manifest();

    // Removes registered artifacts and the manifest; never throws.
    void cleanup() noexcept;

    // Recomputes the checksums recorded by a previous run's manifest.
    static ManifestCheck verify_manifest(const std::string& directory);

private:
    std::string dir_;
    std::vector<std::string> names_;
    std::vector<std::pair<std::string, std::string>> records_;
};

}  // namespace funscreen
