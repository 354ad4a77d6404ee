#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impactkit/chat_gateway.hpp"
#include "impactkit/paper_record.hpp"

namespace impactkit::predictor {

using WarnFn = std::function<void(const std::string&)>;

/// Dense text representation. The toolkit's native encoder is a hashed
/// bag-of-words: lowercase word tokens of title + abstract are hashed with
/// FNV-1a 64 (offset 14695981039346656037, prime 1099511628211) into `dim`
/// buckets, bucket counts L2-normalized. It stands in for a language-model
/// token representation; precomputed vectors from any encoder can be fed
/// through the same training and prediction interfaces.
struct FeatureVector {
    std::vector<double> values;
};

std::uint64_t fnv1a64(std::string_view bytes);

FeatureVector encode_text(std::string_view title, std::string_view abstract,
                          std::size_t dim, const WarnFn& warn = {});

enum class LossKind { MSE, L1, SmoothL1, BCE };

const char* to_string(LossKind kind);
std::optional<LossKind> loss_kind_from_string(std::string_view name);

/// One-hidden-layer regression head: input_dim -> hidden_dim (tanh) -> 1,
/// followed by a sigmoid. w1 is row-major [hidden_dim x input_dim].
struct RegressorParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    std::uint64_t seed = 0;
    LossKind trained_loss = LossKind::MSE;

    friend bool operator==(const RegressorParams&, const RegressorParams&) = default;
};

/// Symmetric uniform init scaled by 1/sqrt(fan_in); biases zero.
RegressorParams init_params(std::size_t input_dim, std::size_t hidden_dim,
                            std::uint64_t seed);

/// Pre-sigmoid network output. Throws ShapeMismatchError when the feature
/// dimension disagrees with the parameters.
double forward_logit(const FeatureVector& features, const RegressorParams& params);

/// Sigmoid of the logit; strictly inside (0, 1) for finite logits.
double forward(const FeatureVector& features, const RegressorParams& params);

struct TrainConfig {
    LossKind loss_kind = LossKind::MSE;
    double smoothl1_delta = 1.0;
    // Base step size; the applied update is learning_rate * batch gradient
    // SUM, so the effective step scales linearly with batch_size.
    double learning_rate = 5e-5;
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t input_dim = 4096;
    std::size_t hidden_dim = 64;
};

/// Loss and its derivative with respect to the pre-sigmoid logit. BCE is
/// evaluated directly on the logit for numerical stability; the other
/// losses compare sigmoid(logit) against the target.
struct LossAtLogit {
    double value = 0.0;
    double dlogit = 0.0;
};

LossAtLogit loss_at_logit(double logit, double target, const TrainConfig& config);

/// Loss evaluated at a prediction already in (0, 1); for BCE the logit is
/// recovered as log(p / (1 - p)). Target must lie in [0, 1].
double loss(double prediction, double target, const TrainConfig& config);

struct TrainExample {
    FeatureVector features;
    double target = 0.0;
};

/// Per-parameter gradient of the loss at one example, laid out to match
/// RegressorParams (w1, b1, w2, b2).
struct ParamGradient {
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
};

ParamGradient loss_gradient(const RegressorParams& params,
                            const TrainExample& example,
                            const TrainConfig& config);

/// Central finite-difference check (step 1e-5) of the analytic gradient
/// over every parameter; returns the maximum relative error. Only
/// meaningful where the loss is differentiable.
double gradient_check(const RegressorParams& params, const TrainExample& example,
                      const TrainConfig& config);

/// Mini-batch gradient descent on the configured loss. Batches are drawn
/// from a seeded shuffle each epoch; updates apply learning_rate times the
/// batch gradient sum. Returns the parameters of the epoch with the best
/// validation MAE (initial parameters count as epoch 0). Deterministic for
/// a fixed (data, config) pair. Throws NonFiniteLossError if a batch loss
/// stops being finite.
struct TrainResult {
    RegressorParams params;
    std::size_t best_epoch = 0;
    double best_validation_mae = 0.0;
    std::vector<double> validation_mae_per_epoch;
};

TrainResult train_baseline(std::span<const TrainExample> train,
                           std::span<const TrainExample> validation,
                           const TrainConfig& config);

/// Versioned on-disk parameter format (JSON, documented in the README).
void save_params(const RegressorParams& params, const std::filesystem::path& path);
RegressorParams load_params(const std::filesystem::path& path);

/// Table-style scoring prompt. Without extras:
///   "Given a certain paper entitled {title}, and its abstract: {abstract}.
///    Predict its normalized scholar impact (between 0 and 1):"
/// With extras, the extended variant carrying Yes/No flags and the
/// reference-quality value; every extras field must be present
/// (ExtrasIncompleteError otherwise).
std::string render_scoring_prompt(std::string_view title, std::string_view abstract,
                                  const std::optional<ExtrasRecord>& extras = {});

/// First decimal literal in a chat response, e.g. "score: 0.73" -> 0.73.
/// Returns nullopt when no numeric token exists.
std::optional<double> parse_first_decimal(std::string_view text);

/// Anything that maps (title, abstract, extras) to a score in [0, 1].
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual double predict(std::string_view title, std::string_view abstract,
                           const std::optional<ExtrasRecord>& extras = {}) = 0;
};

/// Frozen native regressor: hashed features through the trained head.
class NativeRegressor : public Predictor {
public:
    explicit NativeRegressor(RegressorParams params) : params_(std::move(params)) {}
    double predict(std::string_view title, std::string_view abstract,
                   const std::optional<ExtrasRecord>& extras = {}) override;
    const RegressorParams& params() const { return params_; }

private:
    RegressorParams params_;
};

/// Scores through a chat gateway using the scoring prompt; parses the first
/// decimal literal of the reply and clamps it to [0, 1] with a warning.
/// Throws UnparseableError when the reply has no number.
class RemotePredictor : public Predictor {
public:
    RemotePredictor(ChatGateway& gateway, WarnFn warn = {})
        : gateway_(gateway), warn_(std::move(warn)) {}
    double predict(std::string_view title, std::string_view abstract,
                   const std::optional<ExtrasRecord>& extras = {}) override;

private:
    ChatGateway& gateway_;
    WarnFn warn_;
};

/// Reference predictor: always the same value.
class ConstantPredictor : public Predictor {
public:
    explicit ConstantPredictor(double value);
    double predict(std::string_view, std::string_view,
                   const std::optional<ExtrasRecord>& = {}) override {
        return value_;
    }

private:
    double value_;
};

}  // namespace impactkit::predictor
