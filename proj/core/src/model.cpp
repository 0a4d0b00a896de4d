#include "frettrace/model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "frettrace/adam.hpp"
#include "frettrace/serialization.hpp"

namespace frettrace {

using nlohmann::json;

ModelConfig ModelConfig::for_features(const FeatureConfig& fcfg, const StringConfig& scfg) {
    ModelConfig cfg;
    cfg.in_channels = fcfg.n_channels();
    cfg.n_bins = fcfg.n_bins();
    cfg.n_strings = 6;
    cfg.n_fret_classes = scfg.n_fret_classes();
    return cfg;
}

void ModelConfig::validate() const {
    if (window_frames != 9) {
        throw std::invalid_argument("ModelConfig: window_frames must be 9");
    }
    if (in_channels <= 0 || n_bins <= 0 || n_strings <= 0 || n_fret_classes <= 0) {
        throw std::invalid_argument("ModelConfig: dimensions must be positive");
    }
    if (n_bins % 4 != 0) {
        throw std::invalid_argument("ModelConfig: n_bins must survive two frequency pools");
    }
    for (int f : conv_filters) {
        if (f <= 0) throw std::invalid_argument("ModelConfig: conv filter counts must be positive");
    }
}

TabModel::TabModel(const ModelConfig& cfg)
    : cfg_(cfg),
      conv1a_("block1.conv_a", cfg.in_channels, cfg.conv_filters[0], 3, 3, 1, 1),
      conv1b_("block1.conv_b", cfg.conv_filters[0], cfg.conv_filters[0], 3, 3, 1, 1),
      conv2a_("block2.conv_a", cfg.conv_filters[0], cfg.conv_filters[1], 3, 3, 1, 0),
      conv2b_("block2.conv_b", cfg.conv_filters[1], cfg.conv_filters[1], 3, 3, 1, 0),
      conv3a_("block3.conv_a", cfg.conv_filters[1], cfg.conv_filters[2], 3, 3, 1, 0),
      conv3b_("block3.conv_b", cfg.conv_filters[2], cfg.conv_filters[2], 3, 3, 1, 0),
      bn1a_("block1.bn_a", cfg.conv_filters[0]), bn1b_("block1.bn_b", cfg.conv_filters[0]),
      bn2a_("block2.bn_a", cfg.conv_filters[1]), bn2b_("block2.bn_b", cfg.conv_filters[1]),
      bn3a_("block3.bn_a", cfg.conv_filters[2]), bn3b_("block3.bn_b", cfg.conv_filters[2]),
      drop2_(cfg.dropout_block2), drop3_(cfg.dropout_block3),
      tab_head_("head.tab", cfg.embedding_dim(), cfg.n_pairs(), cfg.dropout_head),
      dev_head_("head.dev", cfg.embedding_dim(), cfg.n_pairs(), cfg.dropout_head),
      ons_head_("head.ons", cfg.embedding_dim(), cfg.n_pairs(), cfg.dropout_head) {
    cfg.validate();
}

void TabModel::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    conv1a_.init(rng);
    conv1b_.init(rng);
    conv2a_.init(rng);
    conv2b_.init(rng);
    conv3a_.init(rng);
    conv3b_.init(rng);
    tab_head_.fc1.init(rng);
    tab_head_.fc2.init(rng);
    dev_head_.fc1.init(rng);
    dev_head_.fc2.init(rng);
    ons_head_.fc1.init(rng);
    ons_head_.fc2.init(rng);
}

Tensor TabModel::forward_backbone(const Tensor& x, bool training, std::mt19937_64& rng) {
    trace_.clear();
    const auto record = [&](const char* label, const Tensor& t) {
        trace_.emplace_back(label, std::array<int, 4>{t.n, t.c, t.h, t.w});
    };
    record("input", x);

    Tensor h = r1a_.forward(bn1a_.forward(conv1a_.forward(x), training));
    h = r1b_.forward(bn1b_.forward(conv1b_.forward(h), training));
    record("block1", h);

    h = r2a_.forward(bn2a_.forward(conv2a_.forward(h), training));
    h = r2b_.forward(bn2b_.forward(conv2b_.forward(h), training));
    record("block2", h);
    h = pool2_.forward(h);
    record("pool2", h);
    h = drop2_.forward(h, training, rng);

    h = r3a_.forward(bn3a_.forward(conv3a_.forward(h), training));
    h = r3b_.forward(bn3b_.forward(conv3b_.forward(h), training));
    record("block3", h);
    h = pool3_.forward(h);
    record("pool3", h);
    h = drop3_.forward(h, training, rng);

    // flatten to [N, embedding]
    Tensor embed(h.n, static_cast<int>(h.item_size()), 1, 1);
    embed.v = std::move(h.v);
    record("embedding", embed);
    return embed;
}

HeadLogitsBatch TabModel::forward(const Tensor& x, bool training, std::mt19937_64& rng) {
    if (x.c != cfg_.in_channels || x.h != cfg_.n_bins || x.w != cfg_.window_frames) {
        throw std::invalid_argument(
            "TabModel::forward: window shape [" + std::to_string(x.c) + ", " +
            std::to_string(x.h) + ", " + std::to_string(x.w) + "] does not match config [" +
            std::to_string(cfg_.in_channels) + ", " + std::to_string(cfg_.n_bins) + ", " +
            std::to_string(cfg_.window_frames) + "]");
    }
    backbone_shape_ = {x.n, x.c, x.h, x.w};
    Tensor embed = forward_backbone(x, training, rng);

    HeadLogitsBatch out;
    out.n = x.n;
    out.n_pairs = cfg_.n_pairs();

    const auto run_head = [&](Head& head) {
        Tensor h = head.fc1.forward(embed);
        h = head.relu.forward(h);
        h = head.drop.forward(h, training, rng);
        return head.fc2.forward(h);
    };

    out.tablature = run_head(tab_head_).v;
    if (cfg_.deviation_head) out.deviation = run_head(dev_head_).v;
    if (cfg_.onset_head) out.onset = run_head(ons_head_).v;
    return out;
}

void TabModel::backward(const HeadLogitsBatch& grads) {
    const int n = grads.n;
    const int embed_dim = cfg_.embedding_dim();

    Tensor dembed(n, embed_dim, 1, 1);
    const auto back_head = [&](Head& head, const std::vector<float>& g) {
        Tensor dy(n, cfg_.n_pairs(), 1, 1);
        dy.v = g;
        Tensor dh = head.fc2.backward(dy);
        dh = head.drop.backward(dh);
        dh = head.relu.backward(dh);
        dh = head.fc1.backward(dh);
        for (std::size_t i = 0; i < dembed.v.size(); ++i) dembed.v[i] += dh.v[i];
    };

    back_head(tab_head_, grads.tablature);
    if (cfg_.deviation_head && !grads.deviation.empty()) back_head(dev_head_, grads.deviation);
    if (cfg_.onset_head && !grads.onset.empty()) back_head(ons_head_, grads.onset);

    // unflatten to the pool3 output shape
    Tensor dh(n, cfg_.conv_filters[2], cfg_.n_bins / 4, 1);
    dh.v = std::move(dembed.v);

    dh = drop3_.backward(dh);
    dh = pool3_.backward(dh);
    dh = conv3b_.backward(bn3b_.backward(r3b_.backward(dh)));
    dh = conv3a_.backward(bn3a_.backward(r3a_.backward(dh)));

    dh = drop2_.backward(dh);
    dh = pool2_.backward(dh);
    dh = conv2b_.backward(bn2b_.backward(r2b_.backward(dh)));
    dh = conv2a_.backward(bn2a_.backward(r2a_.backward(dh)));

    dh = conv1b_.backward(bn1b_.backward(r1b_.backward(dh)));
    conv1a_.backward(bn1a_.backward(r1a_.backward(dh)));
}

std::vector<ParamView> TabModel::params() {
    std::vector<ParamView> out;
    const auto add = [&](std::vector<ParamView> views) {
        for (auto& v : views) out.push_back(std::move(v));
    };
    add(conv1a_.params());
    add(bn1a_.params());
    add(conv1b_.params());
    add(bn1b_.params());
    add(conv2a_.params());
    add(bn2a_.params());
    add(conv2b_.params());
    add(bn2b_.params());
    add(conv3a_.params());
    add(bn3a_.params());
    add(conv3b_.params());
    add(bn3b_.params());
    add(tab_head_.fc1.params());
    add(tab_head_.fc2.params());
    if (cfg_.deviation_head) {
        add(dev_head_.fc1.params());
        add(dev_head_.fc2.params());
    }
    if (cfg_.onset_head) {
        add(ons_head_.fc1.params());
        add(ons_head_.fc2.params());
    }
    return out;
}

std::vector<std::pair<std::string, std::span<float>>> TabModel::state_blocks() {
    std::vector<std::pair<std::string, std::span<float>>> out;
    BatchNorm2d* bns[] = {&bn1a_, &bn1b_, &bn2a_, &bn2b_, &bn3a_, &bn3b_};
    const char* names[] = {"block1.bn_a", "block1.bn_b", "block2.bn_a",
                           "block2.bn_b", "block3.bn_a", "block3.bn_b"};
    for (int i = 0; i < 6; ++i) {
        out.emplace_back(std::string(names[i]) + ".running_mean", bns[i]->running_mean());
        out.emplace_back(std::string(names[i]) + ".running_var", bns[i]->running_var());
    }
    return out;
}

std::size_t TabModel::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.value.size();
    return n;
}

void TabModel::zero_grad() {
    for (auto& p : params()) {
        std::fill(p.grad.begin(), p.grad.end(), 0.f);
    }
}

// ---------------------------------------------------------------------------
// Windowing

Tensor windowize(const SpectralFeatures& features) {
    return windowize_range(features, 0, features.n_frames);
}

Tensor windowize_range(const SpectralFeatures& features, int first, int count) {
    if (features.n_frames <= 0) {
        throw std::invalid_argument("windowize: empty feature block");
    }
    constexpr int kWindow = 9;
    constexpr int kHalf = kWindow / 2;
    Tensor out(count, features.n_channels, features.n_bins, kWindow);
    for (int i = 0; i < count; ++i) {
        const int center = first + i;
        for (int c = 0; c < features.n_channels; ++c) {
            for (int b = 0; b < features.n_bins; ++b) {
                float* dst = &out.at(i, c, b, 0);
                for (int k = 0; k < kWindow; ++k) {
                    const int t = std::clamp(center - kHalf + k, 0, features.n_frames - 1);
                    dst[k] = features.at(c, b, t);
                }
            }
        }
    }
    return out;
}

HeadLogitsBatch infer_frames(TabModel& model, const SpectralFeatures& features,
                             int batch_windows) {
    HeadLogitsBatch out;
    out.n = features.n_frames;
    out.n_pairs = model.config().n_pairs();
    const std::size_t row = static_cast<std::size_t>(out.n_pairs);
    out.tablature.resize(static_cast<std::size_t>(out.n) * row);
    if (model.config().deviation_head) out.deviation.resize(out.tablature.size());
    if (model.config().onset_head) out.onset.resize(out.tablature.size());

    std::mt19937_64 rng(0);  // unused in evaluation mode
    for (int start = 0; start < features.n_frames; start += batch_windows) {
        const int count = std::min(batch_windows, features.n_frames - start);
        Tensor windows = windowize_range(features, start, count);
        HeadLogitsBatch chunk = model.forward(windows, /*training=*/false, rng);
        std::copy(chunk.tablature.begin(), chunk.tablature.end(),
                  out.tablature.begin() + static_cast<std::size_t>(start) * row);
        if (!chunk.deviation.empty()) {
            std::copy(chunk.deviation.begin(), chunk.deviation.end(),
                      out.deviation.begin() + static_cast<std::size_t>(start) * row);
        }
        if (!chunk.onset.empty()) {
            std::copy(chunk.onset.begin(), chunk.onset.end(),
                      out.onset.begin() + static_cast<std::size_t>(start) * row);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4654434Bu;  // "FTCK"
constexpr std::uint32_t kCheckpointVersion = 1;

json model_config_to_json(const ModelConfig& m) {
    return json{{"in_channels", m.in_channels},
                {"n_bins", m.n_bins},
                {"window_frames", m.window_frames},
                {"conv_filters", m.conv_filters},
                {"dropout_block2", m.dropout_block2},
                {"dropout_block3", m.dropout_block3},
                {"dropout_head", m.dropout_head},
                {"n_strings", m.n_strings},
                {"n_fret_classes", m.n_fret_classes},
                {"deviation_head", m.deviation_head},
                {"onset_head", m.onset_head}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig m;
    m.in_channels = j.at("in_channels").get<int>();
    m.n_bins = j.at("n_bins").get<int>();
    m.window_frames = j.at("window_frames").get<int>();
    const auto filters = j.at("conv_filters").get<std::vector<int>>();
    if (filters.size() != 3) throw std::runtime_error("checkpoint: conv_filters must have 3 entries");
    std::copy(filters.begin(), filters.end(), m.conv_filters.begin());
    m.dropout_block2 = j.at("dropout_block2").get<double>();
    m.dropout_block3 = j.at("dropout_block3").get<double>();
    m.dropout_head = j.at("dropout_head").get<double>();
    m.n_strings = j.at("n_strings").get<int>();
    m.n_fret_classes = j.at("n_fret_classes").get<int>();
    m.deviation_head = j.at("deviation_head").get<bool>();
    m.onset_head = j.at("onset_head").get<bool>();
    return m;
}

json feature_config_to_json(const FeatureConfig& f) {
    return json{{"mode", f.mode == FeatureMode::kHcqt ? "hcqt" : "cqt"},
                {"hop_length", f.hop_length},
                {"bins_per_semitone", f.bins_per_semitone},
                {"n_octaves", f.n_octaves},
                {"base_frequencies", f.base_frequencies}};
}

FeatureConfig feature_config_from_json(const json& j) {
    FeatureConfig f;
    f.mode = j.at("mode").get<std::string>() == "hcqt" ? FeatureMode::kHcqt : FeatureMode::kCqt;
    f.hop_length = j.at("hop_length").get<int>();
    f.bins_per_semitone = j.at("bins_per_semitone").get<int>();
    f.n_octaves = j.at("n_octaves").get<int>();
    f.base_frequencies = j.at("base_frequencies").get<std::vector<double>>();
    return f;
}

json loss_config_to_json(const LossConfig& l) {
    return json{{"gamma", l.gamma},
                {"lambda_inh", l.lambda_inh},
                {"deviation_loss",
                 l.deviation_loss == DeviationLossKind::kContinuousBernoulli ? "continuous_bernoulli"
                                                                             : "mse"},
                {"r", l.r},
                {"dev_mask", l.dev_mask == DeviationMaskMode::kActivity ? "activity" : "all"}};
}

LossConfig loss_config_from_json(const json& j) {
    LossConfig l;
    l.gamma = j.at("gamma").get<double>();
    l.lambda_inh = j.at("lambda_inh").get<double>();
    l.deviation_loss = j.at("deviation_loss").get<std::string>() == "mse"
                           ? DeviationLossKind::kMeanSquaredError
                           : DeviationLossKind::kContinuousBernoulli;
    l.r = j.at("r").get<double>();
    l.dev_mask = j.at("dev_mask").get<std::string>() == "all" ? DeviationMaskMode::kAll
                                                              : DeviationMaskMode::kActivity;
    return l;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, TabModel& model,
                     const FeatureConfig& fcfg, const LossConfig& lcfg,
                     std::int64_t iteration, const AdamState* adam) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());

    io::write_u32(f, kCheckpointMagic);
    io::write_u32(f, kCheckpointVersion);
    json header = {{"model", model_config_to_json(model.config())},
                   {"features", feature_config_to_json(fcfg)},
                   {"loss", loss_config_to_json(lcfg)},
                   {"iteration", iteration}};
    io::write_string(f, header.dump());

    const auto params = model.params();
    io::write_u64(f, params.size());
    for (const auto& p : params) {
        io::write_string(f, p.name);
        io::write_f32_block(f, std::span<const float>(p.value.data(), p.value.size()));
    }
    const auto state = model.state_blocks();
    io::write_u64(f, state.size());
    for (const auto& [name, block] : state) {
        io::write_string(f, name);
        io::write_f32_block(f, std::span<const float>(block.data(), block.size()));
    }

    io::write_u32(f, adam != nullptr ? 1u : 0u);
    if (adam != nullptr) {
        io::write_u64(f, static_cast<std::uint64_t>(adam->t));
        io::write_u64(f, adam->m.size());
        for (std::size_t i = 0; i < adam->m.size(); ++i) {
            io::write_f32_block(f, adam->m[i]);
            io::write_f32_block(f, adam->v[i]);
        }
    }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
    if (io::read_u32(f) != kCheckpointMagic) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    const std::uint32_t version = io::read_u32(f);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " in " + path.string());
    }
    json header = json::parse(io::read_string(f));

    LoadedCheckpoint out;
    out.meta.model = model_config_from_json(header.at("model"));
    out.meta.features = feature_config_from_json(header.at("features"));
    out.meta.loss = loss_config_from_json(header.at("loss"));
    out.meta.iteration = header.at("iteration").get<std::int64_t>();

    out.model = std::make_unique<TabModel>(out.meta.model);
    auto params = out.model->params();
    const std::uint64_t n_params = io::read_u64(f);
    if (n_params != params.size()) {
        throw std::runtime_error("checkpoint parameter list does not match model config");
    }
    for (auto& p : params) {
        const std::string name = io::read_string(f);
        const std::vector<float> block = io::read_f32_block(f);
        if (name != p.name || block.size() != p.value.size()) {
            throw std::runtime_error("checkpoint block " + name + " does not match model block " +
                                     p.name);
        }
        std::copy(block.begin(), block.end(), p.value.begin());
    }
    auto state = out.model->state_blocks();
    const std::uint64_t n_state = io::read_u64(f);
    if (n_state != state.size()) {
        throw std::runtime_error("checkpoint state list does not match model config");
    }
    for (auto& [name, span] : state) {
        const std::string got = io::read_string(f);
        const std::vector<float> block = io::read_f32_block(f);
        if (got != name || block.size() != span.size()) {
            throw std::runtime_error("checkpoint state block mismatch: " + got);
        }
        std::copy(block.begin(), block.end(), span.begin());
    }

    if (io::read_u32(f) != 0) {
        out.adam = std::make_unique<AdamState>();
        out.adam->t = static_cast<std::int64_t>(io::read_u64(f));
        const std::uint64_t n = io::read_u64(f);
        out.adam->m.resize(n);
        out.adam->v.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            out.adam->m[i] = io::read_f32_block(f);
            out.adam->v[i] = io::read_f32_block(f);
        }
    }
    return out;
}

}  // namespace frettrace
