#include "impactkit/ranking_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "impactkit/errors.hpp"

namespace impactkit::eval {

namespace {

double dcg(std::span<const double> gains, std::size_t k) {
    const std::size_t limit = std::min(k, gains.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < limit; ++i) {
        // rank is 1-based: discount log2(rank + 1).
        sum += (std::exp2(gains[i]) - 1.0) / std::log2(double(i) + 2.0);
    }
    return sum;
}

}  // namespace

double mae(std::span<const Prediction> pairs) {
    if (pairs.empty()) throw EmptyInputError("mae of an empty prediction set");
    double sum = 0.0;
    for (const auto& p : pairs) sum += std::fabs(p.truth - p.predicted);
    return sum / double(pairs.size());
}

double ndcg_at_k(std::span<const Prediction> pairs, std::size_t k,
                 bool* all_zero_warning) {
    if (pairs.empty()) {
        throw EmptyInputError("ndcg of an empty prediction set");
    }
    if (k == 0) throw InvalidArgumentError("ndcg cutoff k must be positive");
    if (all_zero_warning) *all_zero_warning = false;

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pairs[a].predicted != pairs[b].predicted) {
            return pairs[a].predicted > pairs[b].predicted;
        }
        return pairs[a].item_id < pairs[b].item_id;
    });

    std::vector<double> predicted_order_gains(pairs.size());
    std::vector<double> ideal_gains(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        predicted_order_gains[i] = pairs[order[i]].truth;
        ideal_gains[i] = pairs[i].truth;
    }
    std::sort(ideal_gains.begin(), ideal_gains.end(), std::greater<>());

    const double ideal = dcg(ideal_gains, k);
    if (ideal == 0.0) {
        // All truths zero: every ranking is ideal.
        if (all_zero_warning) *all_zero_warning = true;
        return 1.0;
    }
    return dcg(predicted_order_gains, k) / ideal;
}

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto bad = [&](unsigned char b) {
        out.push_back(char32_t(0xDC00u + b));
    };
    while (i < text.size()) {
        const unsigned char b0 = static_cast<unsigned char>(text[i]);
        std::size_t len;
        if (b0 < 0x80) {
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
        } else {
            bad(b0);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            bad(b0);
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? b0 : char32_t(b0 & (0x7Fu >> len));
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j) {
            const unsigned char bj = static_cast<unsigned char>(text[i + j]);
            if ((bj & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (bj & 0x3Fu);
        }
        static constexpr char32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (!ok || cp < kMinForLen[len] || cp > 0x10FFFF ||
            (cp >= 0xD800 && cp <= 0xDFFF)) {
            bad(b0);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    const std::vector<char32_t> s = decode_utf8(a);
    const std::vector<char32_t> t = decode_utf8(b);
    if (s.empty()) return t.size();
    if (t.empty()) return s.size();

    // Single-row dynamic program; row indexes positions in t.
    std::vector<std::size_t> row(t.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= s.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= t.size(); ++j) {
            const std::size_t saved = row[j];
            const std::size_t substitute =
                diagonal + (s[i - 1] == t[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, substitute});
            diagonal = saved;
        }
    }
    return row[t.size()];
}

double ned(std::string_view a, std::string_view b) {
    const std::size_t la = decode_utf8(a).size();
    const std::size_t lb = decode_utf8(b).size();
    const std::size_t longer = std::max(la, lb);
    if (longer == 0) return 0.0;  // both empty: identical
    return double(edit_distance(a, b)) / double(longer);
}

EvalReport evaluate(std::span<const Prediction> pairs, std::size_t k) {
    if (pairs.empty()) {
        throw EmptyInputError("cannot evaluate an empty prediction set");
    }
    for (const auto& p : pairs) {
        if (!(p.truth >= 0.0 && p.truth <= 1.0) ||
            !(p.predicted >= 0.0 && p.predicted <= 1.0)) {
            throw InvalidArgumentError("prediction " + p.item_id +
                                       " has a value outside [0, 1]");
        }
    }
    EvalReport report;
    report.n = pairs.size();
    report.k = k;
    report.mae = mae(pairs);
    report.ndcg_at_k = ndcg_at_k(pairs, k, &report.all_zero_truths);
    return report;
}

}  // namespace impactkit::eval
