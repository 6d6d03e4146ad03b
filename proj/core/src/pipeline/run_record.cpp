#include "thermoscope/pipeline/run_record.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "thermoscope/error.hpp"
#include "thermoscope/eval/report.hpp"

namespace thermoscope::pipeline {

namespace fs = std::filesystem;

std::string git_blob_hash_bytes(const std::string& content) {
    std::string object = "blob " + std::to_string(content.size());
    object.push_back('\0');
    object += content;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(object.data(), object.size(), digest, &length, EVP_sha1(), nullptr) != 1) {
        throw Error("SHA-1 computation failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        const unsigned char b = digest[i];
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string git_blob_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string() + " for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    return git_blob_hash_bytes(ss.str());
}

std::string manifest_images_hash(const data::DatasetManifest& manifest) {
    std::vector<std::string> lines;
    for (const auto& r : manifest.records) {
        std::string h = "missing";
        if (fs::is_regular_file(r.path)) h = git_blob_hash(r.path);
        lines.push_back(r.image_id + " " + h);
    }
    std::sort(lines.begin(), lines.end());
    std::string joined;
    for (const auto& l : lines) joined += l + '\n';
    return git_blob_hash_bytes(joined);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunRecord::add_artifact(const std::string& name, const fs::path& path) { artifacts[name] = path; }

void RunRecord::check_artifacts() const {
    for (const auto& [name, path] : artifacts) {
        if (!fs::exists(path)) throw IoError("artifact '" + name + "' missing at " + path.string());
    }
}

nlohmann::json RunRecord::to_json() const {
    nlohmann::json arts = nlohmann::json::object();
    for (const auto& [name, path] : artifacts) arts[name] = path.string();
    return {{"pipeline", pipeline},
            {"tag", tag},
            {"config", config},
            {"input_hashes", input_hashes},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"artifacts", arts},
            {"report", report ? eval::to_json(*report) : nlohmann::json(nullptr)},
            {"eval_frames", eval_frames},
            {"extra", extra},
            {"warnings", warnings}};
}

void RunRecord::save(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run record " + path.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("failed writing run record " + path.string());
}

}  // namespace thermoscope::pipeline
