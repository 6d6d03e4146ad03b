#include "thermoscope/training/checkpoint.hpp"

#include "thermoscope/container.hpp"
#include "thermoscope/error.hpp"

namespace thermoscope::training {

void Checkpoint::save(const std::filesystem::path& path) const {
    Container c;
    nlohmann::json history_json = nlohmann::json::array();
    for (const auto& r : history) history_json.push_back({r.iteration, r.total, r.content, r.style, r.tv});
    c.metadata = {{"kind", "msgnet-checkpoint"},
                  {"format_version", format_version},
                  {"generator", generator.arch().to_json()},
                  {"config", config},
                  {"epoch", epoch},
                  {"history", std::move(history_json)}};
    for (const auto& p : generator.parameters()) c.tensors.emplace_back(p.name, p.value);
    write_container(path, c);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    Container c = read_container(path);
    try {
        if (c.metadata.at("kind").get<std::string>() != "msgnet-checkpoint") {
            throw IoError(path.string() + " is not a style checkpoint");
        }
        Checkpoint ck;
        ck.format_version = c.metadata.at("format_version").get<int>();
        if (ck.format_version != kCheckpointFormatVersion) {
            throw IoError("unsupported checkpoint format_version " + std::to_string(ck.format_version));
        }
        const auto arch = style::GeneratorArch::from_json(c.metadata.at("generator"));
        nn::ParameterList params;
        for (auto& [name, t] : c.tensors) params.emplace_back(name, std::move(t));
        ck.generator = style::Generator::from_parameters(arch, std::move(params));
        ck.config = c.metadata.value("config", nlohmann::json::object());
        ck.epoch = c.metadata.at("epoch").get<int>();
        for (const auto& r : c.metadata.at("history")) {
            ck.history.push_back({r.at(0).get<long>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                  r.at(3).get<double>(), r.at(4).get<double>()});
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt style checkpoint " + path.string() + ": " + e.what());
    } catch (const DimensionError& e) {
        throw IoError("corrupt style checkpoint " + path.string() + ": " + e.what());
    } catch (const NumericError& e) {
        throw IoError("corrupt style checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace thermoscope::training
