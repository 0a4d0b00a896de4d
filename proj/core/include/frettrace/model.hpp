#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "frettrace/annotations.hpp"
#include "frettrace/features.hpp"
#include "frettrace/layers.hpp"
#include "frettrace/losses.hpp"
#include "frettrace/tensor.hpp"

namespace frettrace {

struct ModelConfig {
    int in_channels = 6;  // 6 for hcqt, 1 for the cqt ablation
    int n_bins = 144;
    int window_frames = 9;
    std::array<int, 3> conv_filters = {16, 32, 48};
    double dropout_block2 = 0.5;
    double dropout_block3 = 0.25;
    double dropout_head = 0.1;
    int n_strings = 6;
    int n_fret_classes = 20;
    bool deviation_head = true;
    bool onset_head = true;

    static ModelConfig for_features(const FeatureConfig& fcfg, const StringConfig& scfg);

    int n_pairs() const { return n_strings * n_fret_classes; }
    int embedding_dim() const { return conv_filters[2] * (n_bins / 4); }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// Raw head outputs for a run of windows (one row per window; within a row
/// the layout is string-major, fret-minor). Disabled heads stay empty.
struct HeadLogitsBatch {
    int n = 0;
    int n_pairs = 0;
    std::vector<float> tablature;
    std::vector<float> deviation;
    std::vector<float> onset;

    const float* tab_row(int i) const { return tablature.data() + static_cast<std::size_t>(i) * n_pairs; }
    const float* dev_row(int i) const { return deviation.data() + static_cast<std::size_t>(i) * n_pairs; }
    const float* ons_row(int i) const { return onset.data() + static_cast<std::size_t>(i) * n_pairs; }
};

/// Convolutional backbone with three prediction heads. Blocks one through
/// three hold two 3x3 convolutions each (batch norm + ReLU after every
/// convolution); only block one pads the time axis, so nine input frames
/// collapse to one. Frequency is padded everywhere and halved by the max
/// pools after blocks two and three.
class TabModel {
public:
    explicit TabModel(const ModelConfig& cfg);

    /// Deterministic parameter initialization.
    void init(std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    /// x: [N, in_channels, n_bins, window_frames]. The rng drives dropout
    /// masks and is only touched in training mode.
    HeadLogitsBatch forward(const Tensor& x, bool training, std::mt19937_64& rng);

    /// Backpropagates head logit gradients from the last forward pass and
    /// accumulates parameter gradients.
    void backward(const HeadLogitsBatch& grads);

    void zero_grad();
    std::vector<ParamView> params();
    std::vector<std::pair<std::string, std::span<float>>> state_blocks();
    std::size_t parameter_count();

    /// (layer label, shape after it) pairs recorded by the last forward.
    const std::vector<std::pair<std::string, std::array<int, 4>>>& last_trace() const {
        return trace_;
    }

private:
    Tensor forward_backbone(const Tensor& x, bool training, std::mt19937_64& rng);

    ModelConfig cfg_;

    Conv2d conv1a_, conv1b_, conv2a_, conv2b_, conv3a_, conv3b_;
    BatchNorm2d bn1a_, bn1b_, bn2a_, bn2b_, bn3a_, bn3b_;
    ReLU r1a_, r1b_, r2a_, r2b_, r3a_, r3b_;
    MaxPoolFreq pool2_, pool3_;
    Dropout drop2_, drop3_;

    struct Head {
        Linear fc1;
        ReLU relu;
        Dropout drop;
        Linear fc2;
        Head(const std::string& name, int embed, int out, double drop_rate)
            : fc1(name + ".fc1", embed, embed / 2), drop(drop_rate),
              fc2(name + ".fc2", embed / 2, out) {}
    };
    Head tab_head_, dev_head_, ons_head_;

    std::array<int, 4> backbone_shape_{};  // input shape of the last forward
    std::vector<std::pair<std::string, std::array<int, 4>>> trace_;
};

/// One 9-frame context window per feature frame, centered, edge frames
/// replicated. Window count equals frame count.
Tensor windowize(const SpectralFeatures& features);

/// Windows [first, first+count) of the feature block.
Tensor windowize_range(const SpectralFeatures& features, int first, int count);

/// Evaluation-mode forward over every frame of a recording, batched.
HeadLogitsBatch infer_frames(TabModel& model, const SpectralFeatures& features,
                             int batch_windows = 256);

// ---------------------------------------------------------------------------
// Checkpoints: parameters, config, optimizer state and iteration counter in
// one versioned file; incompatible versions or configs fail loudly.

struct AdamState;  // defined in adam.hpp

struct CheckpointMeta {
    ModelConfig model;
    FeatureConfig features;
    LossConfig loss;
    std::int64_t iteration = 0;
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    std::unique_ptr<TabModel> model;
    std::unique_ptr<AdamState> adam;  // null when the file carries no optimizer state
};

void save_checkpoint(const std::filesystem::path& path, TabModel& model,
                     const FeatureConfig& fcfg, const LossConfig& lcfg,
                     std::int64_t iteration, const AdamState* adam);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace frettrace
