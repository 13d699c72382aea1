#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cgc/error.hpp"
#include "cgc/image.hpp"
#include "cgc/manifest.hpp"
#include "cgc/rng.hpp"
#include "cgc/tensor.hpp"

namespace cgc {

// Normalized gray-level co-occurrence matrix at a fixed pixel offset.
struct Glcm {
    int levels = 16;
    int dx = 1, dy = 0;
    bool symmetric = true;
    std::vector<double> p;  // levels x levels, row-major, sums to 1

    double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
    double& at(int i, int j) { return p[static_cast<std::size_t>(i) * levels + j]; }
};

struct TextureFeatures {
    double energy = 0.0;
    double contrast = 0.0;
    double entropy = 0.0;
    double correlation = 0.0;
};

// Pixels quantize to floor(p*levels/256); pairs are counted at the given
// offset, optionally also in the reverse direction (symmetric mode), then
// normalized by the total count.
inline Glcm compute_glcm(const GrayImage& img, int levels, int dx, int dy, bool symmetric = true) {
    if (levels < 2) throw ParamError("glcm needs at least 2 gray levels");
    if (dx == 0 && dy == 0) throw ParamError("glcm offset must be nonzero");

    Glcm g;
    g.levels = levels;
    g.dx = dx;
    g.dy = dy;
    g.symmetric = symmetric;
    g.p.assign(static_cast<std::size_t>(levels) * levels, 0.0);

    auto quant = [&](std::uint8_t v) { return static_cast<int>(v) * levels / 256; };
    std::uint64_t total = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int x2 = x + dx, y2 = y + dy;
            if (x2 < 0 || y2 < 0 || x2 >= img.width || y2 >= img.height) continue;
            int a = quant(img.at(x, y)), b = quant(img.at(x2, y2));
            g.at(a, b) += 1.0;
            ++total;
            if (symmetric) {
                g.at(b, a) += 1.0;
                ++total;
            }
        }
    if (total == 0) throw EmptyPairs("image too small for the requested glcm offset");
    for (double& v : g.p) v /= static_cast<double>(total);
    return g;
}

// Haralick-style features. 0*ln(0) counts as 0; correlation is 0 by
// convention when either marginal deviation vanishes.
inline TextureFeatures glcm_features(const Glcm& g) {
    TextureFeatures f;
    double mu_i = 0.0, mu_j = 0.0;
    for (int i = 0; i < g.levels; ++i)
        for (int j = 0; j < g.levels; ++j) {
            double p = g.at(i, j);
            f.energy += p * p;
            f.contrast += static_cast<double>(i - j) * (i - j) * p;
            if (p > 0.0) f.entropy -= p * std::log(p);
            mu_i += i * p;
            mu_j += j * p;
        }
    double var_i = 0.0, var_j = 0.0, cov = 0.0;
    for (int i = 0; i < g.levels; ++i)
        for (int j = 0; j < g.levels; ++j) {
            double p = g.at(i, j);
            var_i += (i - mu_i) * (i - mu_i) * p;
            var_j += (j - mu_j) * (j - mu_j) * p;
            cov += (i - mu_i) * (j - mu_j) * p;
        }
    double sigma = std::sqrt(var_i) * std::sqrt(var_j);
    f.correlation = sigma < 1e-12 ? 0.0 : cov / sigma;
    return f;
}

// Optional per-dimension standardization fitted on the training split.
struct FeatureStandardizer {
    std::vector<double> mean;
    std::vector<double> std;
};

struct FeatureConfig {
    int levels = 16;
    bool symmetric = true;
    // The four canonical directions.
    std::vector<std::pair<int, int>> offsets = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    FeatureStandardizer standardizer;  // empty = identity
};

// Concatenated (energy, contrast, entropy, correlation) per offset;
// length 4*|offsets| (16 with the default config).
inline Tensor feature_vector(const GrayImage& img, const FeatureConfig& cfg = {}) {
    if (cfg.offsets.empty()) throw ParamError("feature config needs at least one offset");
    std::vector<double> v;
    v.reserve(4 * cfg.offsets.size());
    for (auto [dx, dy] : cfg.offsets) {
        TextureFeatures f = glcm_features(compute_glcm(img, cfg.levels, dx, dy, cfg.symmetric));
        v.push_back(f.energy);
        v.push_back(f.contrast);
        v.push_back(f.entropy);
        v.push_back(f.correlation);
    }
    if (!cfg.standardizer.mean.empty()) {
        if (cfg.standardizer.mean.size() != v.size() || cfg.standardizer.std.size() != v.size())
            throw DimMismatch("standardizer dimension does not match feature dimension");
        for (std::size_t d = 0; d < v.size(); ++d) {
            double s = cfg.standardizer.std[d];
            v[d] = (v[d] - cfg.standardizer.mean[d]) / (s > 1e-12 ? s : 1.0);
        }
    }
    return Tensor({v.size()}, std::move(v));
}

inline FeatureStandardizer fit_standardizer(const std::vector<Tensor>& features) {
    if (features.empty()) throw DegenerateData("no features to standardize");
    const std::size_t d = features[0].numel();
    FeatureStandardizer s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (const auto& f : features)
        for (std::size_t k = 0; k < d; ++k) s.mean[k] += f[k];
    for (double& m : s.mean) m /= static_cast<double>(features.size());
    for (const auto& f : features)
        for (std::size_t k = 0; k < d; ++k) s.std[k] += (f[k] - s.mean[k]) * (f[k] - s.mean[k]);
    for (double& v : s.std) v = std::sqrt(v / static_cast<double>(features.size()));
    return s;
}

// One-vs-rest linear classifier; one weight/bias pair per class in
// ClassLabel order.
struct LinearSvmModel {
    std::vector<std::vector<double>> weights;  // [kNumClasses][dim]
    std::vector<double> bias;                  // [kNumClasses]
    double lambda = 1e-3;
    int epochs = 200;
    std::uint64_t seed = 0;

    std::size_t dim() const { return weights.empty() ? 0 : weights[0].size(); }
};

// Regularized one-vs-rest hinge objective: sum over classes of
// lambda/2 |w|^2 + mean hinge loss.
inline double svm_objective(const LinearSvmModel& m,
                            const std::vector<std::pair<Tensor, ClassLabel>>& data, double lambda) {
    double obj = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        double reg = 0.0;
        for (double w : m.weights[static_cast<std::size_t>(c)]) reg += w * w;
        obj += 0.5 * lambda * reg;
        double hinge = 0.0;
        for (const auto& [x, label] : data) {
            double score = m.bias[static_cast<std::size_t>(c)];
            for (std::size_t d = 0; d < x.numel(); ++d)
                score += m.weights[static_cast<std::size_t>(c)][d] * x[d];
            double y = static_cast<int>(label) == c ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - y * score);
        }
        obj += hinge / static_cast<double>(data.size());
    }
    return obj;
}

// Pegasos stochastic subgradient training, eta_t = 1/(lambda*t), one shared
// step counter across the three one-vs-rest problems. The bias is updated
// unregularized. When epoch_averages is given, the within-epoch average of
// the weights is recorded after every epoch.
inline LinearSvmModel svm_train(const std::vector<std::pair<Tensor, ClassLabel>>& data,
                                double lambda, int epochs, Rng& rng,
                                std::vector<LinearSvmModel>* epoch_averages = nullptr) {
    if (lambda <= 0.0) throw ParamError("lambda must be > 0");
    if (epochs < 1) throw ParamError("epochs must be >= 1");
    if (data.empty()) throw DegenerateData("no training samples");

    bool present[kNumClasses] = {};
    for (const auto& [x, label] : data) present[static_cast<int>(label)] = true;
    int distinct = present[0] + present[1] + present[2];
    if (distinct < 2) throw DegenerateData("svm needs at least two classes present");

    const std::size_t dim = data[0].first.numel();
    for (const auto& [x, label] : data)
        if (x.numel() != dim) throw DimMismatch("inconsistent feature dimensions");

    LinearSvmModel m;
    m.weights.assign(kNumClasses, std::vector<double>(dim, 0.0));
    m.bias.assign(kNumClasses, 0.0);
    m.lambda = lambda;
    m.epochs = epochs;

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::uint64_t t = 0;
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        LinearSvmModel avg = m;
        for (auto& w : avg.weights) std::fill(w.begin(), w.end(), 0.0);
        std::fill(avg.bias.begin(), avg.bias.end(), 0.0);

        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const Tensor& x = data[i].first;
            const int yi = static_cast<int>(data[i].second);
            for (int c = 0; c < kNumClasses; ++c) {
                auto& w = m.weights[static_cast<std::size_t>(c)];
                double& b = m.bias[static_cast<std::size_t>(c)];
                double y = c == yi ? 1.0 : -1.0;
                double score = b;
                for (std::size_t d = 0; d < dim; ++d) score += w[d] * x[d];
                const double shrink = 1.0 - eta * lambda;
                if (y * score < 1.0) {
                    for (std::size_t d = 0; d < dim; ++d) w[d] = shrink * w[d] + eta * y * x[d];
                    b += eta * y;
                } else {
                    for (std::size_t d = 0; d < dim; ++d) w[d] *= shrink;
                }
            }
            if (epoch_averages) {
                for (int c = 0; c < kNumClasses; ++c) {
                    for (std::size_t d = 0; d < dim; ++d)
                        avg.weights[static_cast<std::size_t>(c)][d] += m.weights[static_cast<std::size_t>(c)][d];
                    avg.bias[static_cast<std::size_t>(c)] += m.bias[static_cast<std::size_t>(c)];
                }
            }
        }
        if (epoch_averages) {
            for (int c = 0; c < kNumClasses; ++c) {
                for (std::size_t d = 0; d < dim; ++d)
                    avg.weights[static_cast<std::size_t>(c)][d] /= static_cast<double>(order.size());
                avg.bias[static_cast<std::size_t>(c)] /= static_cast<double>(order.size());
            }
            epoch_averages->push_back(avg);
        }
    }
    return m;
}

// Argmax of w.x + b over classes; ties go to the lowest class index.
inline ClassLabel svm_predict(const LinearSvmModel& m, const Tensor& x) {
    if (x.numel() != m.dim()) throw DimMismatch("feature dimension does not match model");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kNumClasses; ++c) {
        double score = m.bias[static_cast<std::size_t>(c)];
        for (std::size_t d = 0; d < x.numel(); ++d)
            score += m.weights[static_cast<std::size_t>(c)][d] * x[d];
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return static_cast<ClassLabel>(best);
}

inline void svm_save_json(const LinearSvmModel& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["classes"] = {"gangue", "matt_coal", "gloss_coal"};
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    j["lambda"] = m.lambda;
    j["epochs"] = m.epochs;
    j["seed"] = m.seed;
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    out << j.dump(2) << '\n';
}

inline LinearSvmModel svm_load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        LinearSvmModel m;
        m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        m.lambda = j.at("lambda").get<double>();
        m.epochs = j.at("epochs").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        if (m.weights.size() != kNumClasses || m.bias.size() != kNumClasses)
            throw FormatError("model must have one weight/bias pair per class");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad model json " + path.string() + ": " + e.what());
    }
}

}  // namespace cgc
