#include "thermoscope/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "thermoscope/error.hpp"

namespace thermoscope {

static_assert(std::endian::native == std::endian::little, "container I/O assumes little-endian hosts");

namespace {

constexpr std::array<char, 4> kMagic{'T', 'S', 'C', 'K'};

template <class T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is, const std::filesystem::path& path) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw IoError("truncated container: " + path.string());
    }
    return v;
}

}  // namespace

const Tensor& Container::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw IoError("container has no tensor named '" + name + "'");
}

bool Container::has_tensor(const std::string& name) const {
    for (const auto& entry : tensors)
        if (entry.first == name) return true;
    return false;
}

void write_container(const std::filesystem::path& path, const Container& container) {
    nlohmann::json header;
    header["metadata"] = container.metadata;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : container.tensors) {
        header["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
        offset += t.size();
    }
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os.write(kMagic.data(), kMagic.size());
    write_pod<std::uint32_t>(os, kContainerVersion);
    write_pod<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& entry : container.tensors) {
        const Tensor& t = entry.second;
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open container: " + path.string());
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
        throw IoError("not a thermoscope container (bad magic): " + path.string());
    }
    const auto version = read_pod<std::uint32_t>(is, path);
    if (version != kContainerVersion) {
        throw IoError("unsupported container version " + std::to_string(version) + ": " + path.string());
    }
    const auto header_len = read_pod<std::uint64_t>(is, path);
    if (header_len > (1ULL << 30)) throw IoError("corrupt container header length: " + path.string());
    std::string text(header_len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(header_len))) {
        throw IoError("truncated container header: " + path.string());
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt container header in " + path.string() + ": " + e.what());
    }

    Container out;
    out.metadata = header.value("metadata", nlohmann::json::object());
    const auto payload_start = is.tellg();
    try {
        for (const auto& entry : header.at("tensors")) {
            auto shape = entry.at("shape").get<std::vector<int>>();
            const auto offset = entry.at("offset").get<std::uint64_t>();
            const auto count = entry.at("count").get<std::uint64_t>();
            if (count != shape_size(shape)) throw IoError("tensor count/shape mismatch in " + path.string());
            std::vector<double> values(count);
            is.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(double)));
            if (!is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
                throw IoError("truncated tensor '" + entry.at("name").get<std::string>() + "' in " + path.string());
            }
            out.tensors.emplace_back(entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt container tensor table in " + path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace thermoscope
