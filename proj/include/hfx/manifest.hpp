#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hfx {

inline constexpr const char* kToolName = "hfx";
inline constexpr const char* kToolVersion = "1.0.0";

uint64_t fnv1a64(const void* data, size_t n);
uint64_t fnv1a64_file(const std::string& path); // ConfigError when unreadable

struct FileRef {
    std::string path;
    uint64_t hash = 0; // fnv1a64 of the file content
    uint64_t bytes = 0;
};

// Reproducibility record written next to every data product. threads,
// timings_ms and settings.threads are the only run-dependent fields; they
// are listed under "volatile_keys" in the JSON so consumers know what to
// mask when comparing manifests across runs.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> settings; // resolved configuration
    std::string constants_version;
    std::vector<FileRef> inputs;
    std::vector<FileRef> outputs;
    int threads = 0;
    double timings_ms = 0.0;
};

FileRef file_ref(const std::string& path);
std::string manifest_to_json(const RunManifest& m); // stable key order
void write_manifest(const std::string& path, const RunManifest& m);

} // namespace hfx
