#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace impactkit::eval {

/// One scored item: ground truth y and model output y-hat, both in [0, 1].
struct Prediction {
    std::string item_id;
    double truth = 0.0;
    double predicted = 0.0;
};

/// Bundle of the two ranking metrics over one prediction set.
struct EvalReport {
    std::size_t n = 0;
    double mae = 0.0;
    double ndcg_at_k = 0.0;
    std::size_t k = 20;
    // Set when every truth is zero: any ranking is ideal, NDCG reported as 1.
    bool all_zero_truths = false;
};

/// Mean absolute error (1/n) * sum |y_i - yhat_i|. Throws EmptyInputError.
double mae(std::span<const Prediction> pairs);

/// NDCG@k with true gains in predicted order: items are ranked by predicted
/// score descending (ties broken by ascending item_id), DCG sums
/// (2^truth - 1) / log2(rank + 1) over the top min(k, n) ranks, and IDCG is
/// the same sum over truths sorted descending. When every truth is zero the
/// ratio is 0/0; the metric returns 1 (every ranking is ideal) and sets
/// *all_zero_warning when provided. Throws EmptyInputError.
double ndcg_at_k(std::span<const Prediction> pairs, std::size_t k = 20,
                 bool* all_zero_warning = nullptr);

/// Unit-cost Levenshtein distance over Unicode scalar values (UTF-8 input;
/// each malformed byte counts as one distinct symbol).
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Normalized edit distance: ED(a, b) / max(|a|, |b|) with lengths in
/// scalar values; 0 when both strings are empty.
double ned(std::string_view a, std::string_view b);

/// Assembles MAE and NDCG@k into a report. Validates that every truth and
/// predicted value lies in [0, 1]. Throws EmptyInputError.
EvalReport evaluate(std::span<const Prediction> pairs, std::size_t k = 20);

/// Decodes UTF-8 into scalar values; malformed bytes map to distinct
/// sentinels in the lone-surrogate range so they stay pairwise unequal.
std::vector<char32_t> decode_utf8(std::string_view text);

}  // namespace impactkit::eval
