#include "hfx/manifest.hpp"
#include "hfx/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <vector>

namespace hfx {

uint64_t fnv1a64(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 14695981039346656037ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw_config("ConfigError", "cannot open file for hashing: " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

FileRef file_ref(const std::string& path) {
    FileRef r;
    r.path = path;
    r.hash = fnv1a64_file(path);
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    r.bytes = in ? static_cast<uint64_t>(in.tellg()) : 0;
    return r;
}

namespace {

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::ordered_json ref_json(const FileRef& r) {
    nlohmann::ordered_json j;
    j["path"] = r.path;
    j["fnv1a64"] = hex64(r.hash); // hex string: JSON numbers are not 64-bit safe
    j["bytes"] = r.bytes;
    return j;
}

} // namespace

std::string manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["command"] = m.command;
    j["constants_version"] = m.constants_version;
    j["settings"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.settings) // std::map iterates sorted
        j["settings"][k] = v;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& r : m.inputs)
        j["inputs"].push_back(ref_json(r));
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& r : m.outputs)
        j["outputs"].push_back(ref_json(r));
    j["threads"] = m.threads;
    j["timings_ms"] = m.timings_ms;
    // settings.threads is the resolved copy of the worker count; listed so
    // manifest diffs across thread counts reduce to nothing.
    j["volatile_keys"] = {"threads", "timings_ms", "settings.threads"};
    return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw_config("ConfigError", "cannot write manifest: " + path);
    out << manifest_to_json(m);
    if (!out)
        throw_config("ConfigError", "write failed: " + path);
}

} // namespace hfx
