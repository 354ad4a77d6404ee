#include "impactkit/predictor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "impactkit/errors.hpp"
#include "impactkit/rng.hpp"

namespace impactkit::predictor {

namespace {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_shapes(const FeatureVector& features, const RegressorParams& params) {
    if (params.input_dim == 0 || params.hidden_dim == 0 ||
        params.w1.size() != params.input_dim * params.hidden_dim ||
        params.b1.size() != params.hidden_dim ||
        params.w2.size() != params.hidden_dim) {
        throw ShapeMismatchError("regressor parameters are internally inconsistent");
    }
    if (features.values.size() != params.input_dim) {
        throw ShapeMismatchError(
            "feature dimension " + std::to_string(features.values.size()) +
            " does not match model input dimension " +
            std::to_string(params.input_dim));
    }
}

std::vector<double> hidden_activations(const FeatureVector& features,
                                       const RegressorParams& params) {
    std::vector<double> h(params.hidden_dim);
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        const double* row = params.w1.data() + j * params.input_dim;
        double z = params.b1[j];
        for (std::size_t i = 0; i < params.input_dim; ++i) {
            z += row[i] * features.values[i];
        }
        h[j] = std::tanh(z);
    }
    return h;
}

/// Formats a number the way the JSON layer does (shortest round trip), so
/// prompts render 0.7 as "0.7" rather than "0.700000".
std::string format_number(double v) { return json(v).dump(); }

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::MSE: return "mse";
        case LossKind::L1: return "l1";
        case LossKind::SmoothL1: return "smoothl1";
        case LossKind::BCE: return "bce";
    }
    return "mse";
}

std::optional<LossKind> loss_kind_from_string(std::string_view name) {
    if (name == "mse") return LossKind::MSE;
    if (name == "l1") return LossKind::L1;
    if (name == "smoothl1") return LossKind::SmoothL1;
    if (name == "bce") return LossKind::BCE;
    return std::nullopt;
}

FeatureVector encode_text(std::string_view title, std::string_view abstract,
                          std::size_t dim, const WarnFn& warn) {
    if (dim < 2) throw InvalidArgumentError("feature dimension must be >= 2");
    FeatureVector out;
    out.values.assign(dim, 0.0);

    std::string token;
    const auto flush = [&] {
        if (token.empty()) return;
        out.values[fnv1a64(token) % dim] += 1.0;
        token.clear();
    };
    const auto consume = [&](std::string_view text) {
        for (const char c : text) {
            const unsigned char b = static_cast<unsigned char>(c);
            if (b >= 0x80) {
                token.push_back(c);  // non-ASCII bytes stay token characters
            } else if (std::isalnum(b)) {
                token.push_back(char(std::tolower(b)));
            } else {
                flush();
            }
        }
        flush();
    };
    consume(title);
    consume(abstract);

    const double norm = std::sqrt(std::inner_product(
        out.values.begin(), out.values.end(), out.values.begin(), 0.0));
    if (norm == 0.0) {
        if (warn) warn("encode_text: no tokens, returning a zero vector");
        return out;
    }
    for (auto& v : out.values) v /= norm;
    return out;
}

RegressorParams init_params(std::size_t input_dim, std::size_t hidden_dim,
                            std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0) {
        throw InvalidArgumentError("layer dimensions must be positive");
    }
    RegressorParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.seed = seed;
    p.w1.resize(input_dim * hidden_dim);
    p.b1.assign(hidden_dim, 0.0);
    p.w2.resize(hidden_dim);
    SplitMix64 rng(seed);
    const double a1 = 1.0 / std::sqrt(double(input_dim));
    for (auto& w : p.w1) w = rng.next_symmetric(a1);
    const double a2 = 1.0 / std::sqrt(double(hidden_dim));
    for (auto& w : p.w2) w = rng.next_symmetric(a2);
    return p;
}

double forward_logit(const FeatureVector& features, const RegressorParams& params) {
    check_shapes(features, params);
    const auto h = hidden_activations(features, params);
    double logit = params.b2;
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        logit += params.w2[j] * h[j];
    }
    return logit;
}

double forward(const FeatureVector& features, const RegressorParams& params) {
    return sigmoid(forward_logit(features, params));
}

LossAtLogit loss_at_logit(double logit, double target, const TrainConfig& config) {
    if (!(target >= 0.0 && target <= 1.0)) {
        throw InvalidArgumentError("loss target must lie in [0, 1]");
    }
    const double p = sigmoid(logit);
    const double dp_dz = p * (1.0 - p);
    const double diff = p - target;
    switch (config.loss_kind) {
        case LossKind::MSE:
            return {diff * diff, 2.0 * diff * dp_dz};
        case LossKind::L1:
            return {std::fabs(diff),
                    (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * dp_dz};
        case LossKind::SmoothL1: {
            const double delta = config.smoothl1_delta;
            if (!(delta > 0.0)) {
                throw InvalidArgumentError("smooth-l1 delta must be positive");
            }
            const double a = std::fabs(diff);
            if (a < delta) {
                return {0.5 * diff * diff / delta, (diff / delta) * dp_dz};
            }
            return {a - 0.5 * delta, (diff > 0.0 ? 1.0 : -1.0) * dp_dz};
        }
        case LossKind::BCE: {
            // Stable form of -(t*log p + (1-t)*log(1-p)) on the logit.
            const double value = std::max(logit, 0.0) - logit * target +
                                 std::log1p(std::exp(-std::fabs(logit)));
            return {value, p - target};
        }
    }
    throw InvalidArgumentError("unknown loss kind");
}

double loss(double prediction, double target, const TrainConfig& config) {
    if (!(prediction > 0.0 && prediction < 1.0)) {
        throw InvalidArgumentError(
            "loss() needs a prediction strictly inside (0, 1); use "
            "loss_at_logit for the boundary");
    }
    const double logit = std::log(prediction / (1.0 - prediction));
    return loss_at_logit(logit, target, config).value;
}

ParamGradient loss_gradient(const RegressorParams& params,
                            const TrainExample& example,
                            const TrainConfig& config) {
    check_shapes(example.features, params);
    const auto h = hidden_activations(example.features, params);
    double logit = params.b2;
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        logit += params.w2[j] * h[j];
    }
    const double g = loss_at_logit(logit, example.target, config).dlogit;

    ParamGradient grad;
    grad.w1.assign(params.w1.size(), 0.0);
    grad.b1.assign(params.hidden_dim, 0.0);
    grad.w2.assign(params.hidden_dim, 0.0);
    grad.b2 = g;
    for (std::size_t j = 0; j < params.hidden_dim; ++j) {
        grad.w2[j] = g * h[j];
        const double dz1 = g * params.w2[j] * (1.0 - h[j] * h[j]);
        grad.b1[j] = dz1;
        double* row = grad.w1.data() + j * params.input_dim;
        for (std::size_t i = 0; i < params.input_dim; ++i) {
            row[i] = dz1 * example.features.values[i];
        }
    }
    return grad;
}

double gradient_check(const RegressorParams& params, const TrainExample& example,
                      const TrainConfig& config) {
    const ParamGradient analytic = loss_gradient(params, example, config);
    constexpr double kStep = 1e-5;

    RegressorParams probe = params;
    const auto loss_at = [&](double* slot, double value) {
        const double saved = *slot;
        *slot = value;
        const double logit = forward_logit(example.features, probe);
        const double out = loss_at_logit(logit, example.target, config).value;
        *slot = saved;
        return out;
    };
    const auto numeric = [&](double* slot) {
        const double v = *slot;
        return (loss_at(slot, v + kStep) - loss_at(slot, v - kStep)) / (2.0 * kStep);
    };
    const auto rel_error = [](double a, double n) {
        return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6});
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < probe.w1.size(); ++i) {
        worst = std::max(worst, rel_error(analytic.w1[i], numeric(&probe.w1[i])));
    }
    for (std::size_t j = 0; j < probe.b1.size(); ++j) {
        worst = std::max(worst, rel_error(analytic.b1[j], numeric(&probe.b1[j])));
    }
    for (std::size_t j = 0; j < probe.w2.size(); ++j) {
        worst = std::max(worst, rel_error(analytic.w2[j], numeric(&probe.w2[j])));
    }
    worst = std::max(worst, rel_error(analytic.b2, numeric(&probe.b2)));
    return worst;
}

TrainResult train_baseline(std::span<const TrainExample> train,
                           std::span<const TrainExample> validation,
                           const TrainConfig& config) {
    if (train.empty()) throw InvalidArgumentError("training set is empty");
    if (!(config.learning_rate >= 0.0)) {
        throw InvalidArgumentError("learning rate must be nonnegative");
    }
    if (config.epochs == 0) throw InvalidArgumentError("epochs must be >= 1");
    if (config.batch_size == 0) throw InvalidArgumentError("batch size must be >= 1");

    RegressorParams params =
        init_params(config.input_dim, config.hidden_dim, config.seed);
    for (const auto& ex : train) check_shapes(ex.features, params);
    for (const auto& ex : validation) check_shapes(ex.features, params);

    const auto validation_mae = [&](const RegressorParams& p) {
        if (validation.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& ex : validation) {
            sum += std::fabs(forward(ex.features, p) - ex.target);
        }
        return sum / double(validation.size());
    };

    TrainResult result;
    result.params = params;
    result.best_epoch = 0;
    result.best_validation_mae = validation_mae(params);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    ParamGradient batch;
    batch.w1.assign(params.w1.size(), 0.0);
    batch.b1.assign(params.hidden_dim, 0.0);
    batch.w2.assign(params.hidden_dim, 0.0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        SplitMix64 rng(config.seed ^ (0x9e3779b97f4a7c15ULL * epoch));
        deterministic_shuffle(order, rng);

        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            const std::size_t end =
                std::min(order.size(), start + config.batch_size);
            std::fill(batch.w1.begin(), batch.w1.end(), 0.0);
            std::fill(batch.b1.begin(), batch.b1.end(), 0.0);
            std::fill(batch.w2.begin(), batch.w2.end(), 0.0);
            batch.b2 = 0.0;

            double batch_loss = 0.0;
            for (std::size_t idx = start; idx < end; ++idx) {
                const TrainExample& ex = train[order[idx]];
                const auto h = hidden_activations(ex.features, params);
                double logit = params.b2;
                for (std::size_t j = 0; j < params.hidden_dim; ++j) {
                    logit += params.w2[j] * h[j];
                }
                const LossAtLogit l = loss_at_logit(logit, ex.target, config);
                batch_loss += l.value;
                const double g = l.dlogit;
                batch.b2 += g;
                for (std::size_t j = 0; j < params.hidden_dim; ++j) {
                    batch.w2[j] += g * h[j];
                    const double dz1 = g * params.w2[j] * (1.0 - h[j] * h[j]);
                    batch.b1[j] += dz1;
                    double* row = batch.w1.data() + j * params.input_dim;
                    const auto& x = ex.features.values;
                    for (std::size_t i = 0; i < params.input_dim; ++i) {
                        row[i] += dz1 * x[i];
                    }
                }
            }
            if (!std::isfinite(batch_loss)) {
                throw NonFiniteLossError(
                    "non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch starting at index " + std::to_string(start));
            }

            const double lr = config.learning_rate;
            for (std::size_t i = 0; i < params.w1.size(); ++i) {
                params.w1[i] -= lr * batch.w1[i];
            }
            for (std::size_t j = 0; j < params.hidden_dim; ++j) {
                params.b1[j] -= lr * batch.b1[j];
                params.w2[j] -= lr * batch.w2[j];
            }
            params.b2 -= lr * batch.b2;
        }

        const double val = validation_mae(params);
        result.validation_mae_per_epoch.push_back(val);
        if (val < result.best_validation_mae) {
            result.best_validation_mae = val;
            result.best_epoch = epoch;
            result.params = params;
        }
    }

    result.params.trained_loss = config.loss_kind;
    result.params.seed = config.seed;
    return result;
}

void save_params(const RegressorParams& params, const std::filesystem::path& path) {
    json doc;
    doc["format_version"] = 1;
    doc["input_dim"] = params.input_dim;
    doc["hidden_dim"] = params.hidden_dim;
    doc["seed"] = params.seed;
    doc["loss_kind"] = to_string(params.trained_loss);
    doc["w1"] = params.w1;
    doc["b1"] = params.b1;
    doc["w2"] = params.w2;
    doc["b2"] = params.b2;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file " + path.string());
    out << doc.dump() << "\n";
    if (!out) throw IoError("failed writing model file " + path.string());
}

RegressorParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw SchemaViolationError("model file " + path.string() +
                                   " is not valid JSON");
    }
    try {
        if (doc.at("format_version").get<int>() != 1) {
            throw SchemaViolationError("unsupported model format version in " +
                                       path.string());
        }
        RegressorParams p;
        p.input_dim = doc.at("input_dim").get<std::size_t>();
        p.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
        p.seed = doc.at("seed").get<std::uint64_t>();
        const auto kind =
            loss_kind_from_string(doc.at("loss_kind").get<std::string>());
        if (!kind) {
            throw SchemaViolationError("unknown loss kind in " + path.string());
        }
        p.trained_loss = *kind;
        p.w1 = doc.at("w1").get<std::vector<double>>();
        p.b1 = doc.at("b1").get<std::vector<double>>();
        p.w2 = doc.at("w2").get<std::vector<double>>();
        p.b2 = doc.at("b2").get<double>();
        if (p.w1.size() != p.input_dim * p.hidden_dim ||
            p.b1.size() != p.hidden_dim || p.w2.size() != p.hidden_dim) {
            throw SchemaViolationError("model file " + path.string() +
                                       " has inconsistent shapes");
        }
        return p;
    } catch (const json::exception& e) {
        throw SchemaViolationError("model file " + path.string() +
                                   " is missing fields: " + e.what());
    }
}

std::string render_scoring_prompt(std::string_view title, std::string_view abstract,
                                  const std::optional<ExtrasRecord>& extras) {
    if (title.empty() || abstract.empty()) {
        throw InvalidArgumentError("scoring prompt needs a title and an abstract");
    }
    std::string out;
    if (!extras) {
        out = "Given a certain paper entitled ";
        out += title;
        out += ", and its abstract: ";
        out += abstract;
        out += ". Predict its normalized scholar impact (between 0 and 1):";
        return out;
    }
    if (!extras->complete()) {
        throw ExtrasIncompleteError(
            "the extended scoring prompt needs sota_claim, released_dataset, "
            "open_access_code, and rqm");
    }
    const auto yes_no = [](bool v) { return v ? "Yes" : "No"; };
    out = "Given a certain paper, Title: ";
    out += title;
    out += " Abstract: ";
    out += abstract;
    out += ". State-of-the-Art Performance: ";
    out += yes_no(*extras->sota_claim);
    out += ". Released a New Dataset: ";
    out += yes_no(*extras->released_dataset);
    out += ". Code Open Access: ";
    out += yes_no(*extras->open_access_code);
    out += ". Reference Quality Metric(on a scale from lowest 0 to highest 1): ";
    out += format_number(*extras->rqm);
    out += ". Predict its normalized academic impact (between 0 and 1):";
    return out;
}

std::optional<double> parse_first_decimal(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool digit = c >= '0' && c <= '9';
        const bool dot_then_digit = c == '.' && i + 1 < text.size() &&
                                    text[i + 1] >= '0' && text[i + 1] <= '9';
        if (!digit && !dot_then_digit) continue;

        std::size_t start = i;
        if (i > 0 && (text[i - 1] == '-' || text[i - 1] == '+')) start = i - 1;
        std::size_t end = i;
        bool seen_dot = false;
        while (end < text.size()) {
            const char e = text[end];
            if (e >= '0' && e <= '9') {
                ++end;
            } else if (e == '.' && !seen_dot && end + 1 < text.size() &&
                       text[end + 1] >= '0' && text[end + 1] <= '9') {
                seen_dot = true;
                ++end;
            } else {
                break;
            }
        }
        try {
            return std::stod(std::string(text.substr(start, end - start)));
        } catch (const std::out_of_range&) {
            return std::nullopt;  // absurdly long digit runs
        }
    }
    return std::nullopt;
}

double NativeRegressor::predict(std::string_view title, std::string_view abstract,
                                const std::optional<ExtrasRecord>&) {
    return forward(encode_text(title, abstract, params_.input_dim), params_);
}

double RemotePredictor::predict(std::string_view title, std::string_view abstract,
                                const std::optional<ExtrasRecord>& extras) {
    const std::string prompt = render_scoring_prompt(title, abstract, extras);
    const std::string reply = gateway_.complete({{"user", prompt}});
    const auto value = parse_first_decimal(reply);
    if (!value) {
        throw UnparseableError("no numeric token in chat reply: " +
                               reply.substr(0, 80));
    }
    if (*value < 0.0 || *value > 1.0) {
        if (warn_) {
            warn_("remote prediction " + std::to_string(*value) +
                  " outside [0, 1]; clamped");
        }
        return std::clamp(*value, 0.0, 1.0);
    }
    return *value;
}

ConstantPredictor::ConstantPredictor(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw InvalidArgumentError("constant predictor value must lie in [0, 1]");
    }
}

}  // namespace impactkit::predictor
