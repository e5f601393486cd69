#include <json.hpp>

#include "vad/binary_io.hpp"
#include "vad/denoiser.hpp"
#include "vad/error.hpp"

namespace vad {

using nlohmann::json;

DenoiserParams<float> Checkpoint::scoring_params() const {
    if (!use_ema || ema.empty()) return params;
    auto out = params;
    out.values = ema;
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto& shape = ckpt.params.shape;
    json header{{"kind", ckpt.kind == CheckpointKind::Network ? "network" : "identity"},
                {"feature_dim", shape.feature_dim},
                {"condition_dim", shape.condition_dim},
                {"embed_dim", shape.embed_dim},
                {"embed_std", shape.embed_std},
                {"encoder_widths", shape.encoder_widths},
                {"decoder_widths", shape.decoder_widths},
                {"param_count", ckpt.params.values.size()},
                {"has_ema", !ckpt.ema.empty()},
                {"use_ema", ckpt.use_ema},
                {"step", ckpt.step},
                {"seed", ckpt.seed},
                {"metadata", json::parse(ckpt.metadata_json)}};
    json tensors = json::array();
    for (const auto& s : ckpt.params.layout) tensors.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
    header["tensors"] = std::move(tensors);

    if (!ckpt.ema.empty() && ckpt.ema.size() != ckpt.params.values.size()) {
        throw InvalidInput("checkpoint EMA shadow does not match parameter count");
    }
    const auto text = header.dump();
    auto os = io::open_out(path);
    io::put_magic(os, "VADW", 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    io::put_f32(os, ckpt.params.frequencies);
    io::put_f32(os, ckpt.params.values);
    if (!ckpt.ema.empty()) io::put_f32(os, ckpt.ema);
    if (!os) throw DataError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    const auto what = path.string();
    io::expect_magic(is, "VADW", 1, what);
    const auto header_len = io::get<std::uint32_t>(is, what);
    std::string text(header_len, '\0');
    if (!is.read(text.data(), header_len)) throw DataError(what + ": truncated checkpoint header");

    Checkpoint ckpt;
    bool has_ema = false;
    std::size_t param_count = 0;
    try {
        const auto h = json::parse(text);
        const auto kind = h.at("kind").get<std::string>();
        if (kind != "network" && kind != "identity") throw DataError(what + ": unknown checkpoint kind " + kind);
        ckpt.kind = kind == "network" ? CheckpointKind::Network : CheckpointKind::Identity;
        auto& shape = ckpt.params.shape;
        shape.feature_dim = h.at("feature_dim").get<std::size_t>();
        shape.condition_dim = h.at("condition_dim").get<std::size_t>();
        shape.embed_dim = h.at("embed_dim").get<std::size_t>();
        shape.embed_std = h.at("embed_std").get<double>();
        shape.encoder_widths = h.at("encoder_widths").get<std::vector<std::size_t>>();
        shape.decoder_widths = h.at("decoder_widths").get<std::vector<std::size_t>>();
        has_ema = h.at("has_ema").get<bool>();
        ckpt.use_ema = h.at("use_ema").get<bool>();
        ckpt.step = h.at("step").get<std::uint64_t>();
        ckpt.seed = h.at("seed").get<std::uint64_t>();
        param_count = h.at("param_count").get<std::size_t>();
        ckpt.metadata_json = h.at("metadata").dump();
    } catch (const json::exception& e) {
        throw DataError(what + ": bad checkpoint header: " + e.what());
    }

    ckpt.params.layout = param_layout(ckpt.params.shape);
    const auto expected = ckpt.params.layout.back().offset + ckpt.params.layout.back().size();
    if (expected != param_count) {
        throw DataError(what + ": header declares " + std::to_string(param_count) + " parameters, shape implies " +
                        std::to_string(expected));
    }
    ckpt.params.frequencies.resize(ckpt.params.shape.embed_dim / 2);
    ckpt.params.values.resize(param_count);
    io::get_f32(is, ckpt.params.frequencies, what);
    io::get_f32(is, ckpt.params.values, what);
    if (has_ema) {
        ckpt.ema.resize(param_count);
        io::get_f32(is, ckpt.ema, what);
    }
    return ckpt;
}

}  // namespace vad
