#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "cgc/error.hpp"
#include "cgc/image.hpp"
#include "cgc/manifest.hpp"
#include "cgc/rng.hpp"
#include "cgc/tensor.hpp"

namespace cgc {

enum class AugmentFactor { five, full };

struct AugmentPlan {
    AugmentFactor factor = AugmentFactor::five;
    double crop_fraction = 0.875;  // 224/256 analog
    std::vector<double> rotation_angles = {45, 90, 135, 180, 270};  // used by the full plan
    double noise_sigma = 8.0;   // u8 units
    double noise_fraction = 1.0;
    int target_size = 64;
    std::uint64_t seed = 0;

    int outputs_per_image() const {
        return factor == AugmentFactor::five ? 5 : 6 + static_cast<int>(rotation_angles.size());
    }
};

// Scalar pixel statistics in [0,1] tensor units, computed over the training
// split only.
struct NormalizationStats {
    double mean = 0.0;
    double std = 1.0;
};

// Crops of size (round(w*f), round(h*f)) at the four corners and center,
// in that order: top-left, top-right, bottom-left, bottom-right, center.
inline std::array<GrayImage, 5> five_crop(const GrayImage& img, double crop_fraction) {
    if (!(crop_fraction > 0.0) || crop_fraction > 1.0)
        throw ParamError("crop_fraction must be in (0,1]");
    const int cw = static_cast<int>(std::llround(img.width * crop_fraction));
    const int ch = static_cast<int>(std::llround(img.height * crop_fraction));
    if (cw < 8 || ch < 8) throw ParamError("crop smaller than 8x8");

    auto take = [&](int ox, int oy) {
        GrayImage out(cw, ch);
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x) out.at(x, y) = img.at(ox + x, oy + y);
        return out;
    };
    const int rx = img.width - cw, ry = img.height - ch;
    return {take(0, 0), take(rx, 0), take(0, ry), take(rx, ry), take(rx / 2, ry / 2)};
}

namespace detail {

// Exact right-angle remap; k is the number of 90-degree turns.
// One turn maps input (x,y) to output (y, w-1-x).
inline GrayImage rotate90(const GrayImage& img, int k) {
    k = ((k % 4) + 4) % 4;
    if (k == 0) return img;
    GrayImage out = k == 2 ? GrayImage(img.width, img.height) : GrayImage(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int ox, oy;
            switch (k) {
                case 1: ox = y; oy = img.width - 1 - x; break;
                case 2: ox = img.width - 1 - x; oy = img.height - 1 - y; break;
                default: ox = img.height - 1 - y; oy = x; break;
            }
            out.at(ox, oy) = img.at(x, y);
        }
    return out;
}

// Inverse-map bilinear rotation about the image center; output has the same
// dimensions as the input, uncovered pixels are filled with 0.
inline GrayImage rotate_bilinear(const GrayImage& img, double degrees) {
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;

    GrayImage out(img.width, img.height);
    auto sample = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
        return img.at(x, y);
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            // Forward map is (x' - c) = R(theta) (x - c); invert with R(-theta).
            double dx = x - cx, dy = y - cy;
            double sxf = cx + c * dx - s * dy;
            double syf = cy + s * dx + c * dy;
            double x0 = std::floor(sxf), y0 = std::floor(syf);
            double fx = sxf - x0, fy = syf - y0;
            int ix = static_cast<int>(x0), iy = static_cast<int>(y0);
            double v = (1 - fx) * (1 - fy) * sample(ix, iy) + fx * (1 - fy) * sample(ix + 1, iy) +
                       (1 - fx) * fy * sample(ix, iy + 1) + fx * fy * sample(ix + 1, iy + 1);
            out.at(x, y) = static_cast<std::uint8_t>(std::llround(std::clamp(v, 0.0, 255.0)));
        }
    return out;
}

}  // namespace detail

// One rotated copy per angle. Multiples of 90 degrees use the exact lossless
// remap (which swaps dimensions for odd quarter turns); everything else goes
// through inverse-map bilinear sampling.
inline std::vector<GrayImage> rotations(const GrayImage& img, const std::vector<double>& angles) {
    std::vector<GrayImage> out;
    out.reserve(angles.size());
    for (double a : angles) {
        if (!std::isfinite(a)) throw ParamError("rotation angle must be finite");
        double r = std::fmod(a, 360.0);
        if (r < 0) r += 360.0;
        double quarters = r / 90.0;
        if (std::abs(quarters - std::round(quarters)) < 1e-12)
            out.push_back(detail::rotate90(img, static_cast<int>(std::llround(quarters))));
        else
            out.push_back(detail::rotate_bilinear(img, a));
    }
    return out;
}

// Per-pixel p' = clamp(round(p + N(0,sigma)), 0, 255).
inline GrayImage add_gaussian_noise(const GrayImage& img, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ParamError("noise sigma must be >= 0");
    if (sigma == 0.0) return img;
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double v = img.pixels[i] + rng.normal(0.0, sigma);
        out.pixels[i] = static_cast<std::uint8_t>(std::llround(std::clamp(v, 0.0, 255.0)));
    }
    return out;
}

// Bilinear resize, align-corners-false: source coord s = (d + 0.5)*scale - 0.5
// with edge clamping; u8 rounding is half-up.
inline GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ParamError("resize target must be >= 1x1");
    if (out_w == img.width && out_h == img.height) return img;

    GrayImage out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, img.height - 1);
        int y1c = std::clamp(y0 + 1, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, img.width - 1);
            int x1c = std::clamp(x0 + 1, 0, img.width - 1);
            double v = (1 - wx) * (1 - wy) * img.at(x0c, y0c) + wx * (1 - wy) * img.at(x1c, y0c) +
                       (1 - wx) * wy * img.at(x0c, y1c) + wx * wy * img.at(x1c, y1c);
            out.at(x, y) = static_cast<std::uint8_t>(std::floor(v + 0.5));
        }
    }
    return out;
}

// Mean and population std over all pixels of all images, in [0,1] units.
// Single streaming pass (Welford).
inline NormalizationStats compute_stats(const DatasetManifest& manifest) {
    if (manifest.empty()) throw ParamError("cannot compute stats of an empty manifest");
    double mean = 0.0, m2 = 0.0;
    std::uint64_t n = 0;
    for (const auto& rec : manifest.records) {
        GrayImage img = read_pnm(manifest.resolve(rec));
        for (std::uint8_t p : img.pixels) {
            double v = p / 255.0;
            ++n;
            double d = v - mean;
            mean += d / static_cast<double>(n);
            m2 += d * (v - mean);
        }
    }
    double std_dev = std::sqrt(m2 / static_cast<double>(n));
    if (std_dev <= 1e-12) throw DegenerateStats("pixel std is zero; cannot normalize");
    return {mean, std_dev};
}

inline Tensor normalize(const Tensor& t, const NormalizationStats& stats) {
    if (stats.std <= 0.0) throw ParamError("normalization std must be > 0");
    Tensor out = t;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = (out[i] - stats.mean) / stats.std;
    return out;
}

inline Tensor denormalize(const Tensor& t, const NormalizationStats& stats) {
    Tensor out = t;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] * stats.std + stats.mean;
    return out;
}

// Expands every record into `outputs_per_image()` augmented copies, resized
// to target_size and written as <stem>_aug<k>.pgm next to a new manifest.csv.
// The five-plan per-record order is: center crop, two seeded corner crops,
// one seeded right-angle rotation, one noisy copy. The full plan emits all
// five crops, all configured rotations and one noisy copy.
// Deterministic given plan.seed; per-record streams are independent of
// processing order.
inline DatasetManifest expand_dataset(const DatasetManifest& manifest, const AugmentPlan& plan,
                                      const std::filesystem::path& out_dir) {
    if (plan.target_size < 8) throw ParamError("target_size must be >= 8");
    if (plan.factor == AugmentFactor::full && plan.rotation_angles.empty())
        throw ParamError("full plan needs rotation angles");

    std::filesystem::create_directories(out_dir);
    DatasetManifest out;
    out.base_dir = out_dir;
    std::unordered_set<std::string> emitted;

    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& rec = manifest.records[i];
        GrayImage img = read_pnm(manifest.resolve(rec));
        Rng rng(derive_seed(plan.seed, i));

        std::vector<GrayImage> copies;
        auto crops = five_crop(img, plan.crop_fraction);
        if (plan.factor == AugmentFactor::five) {
            copies.push_back(crops[4]);  // center
            std::uint64_t c0 = rng.below(4);
            std::uint64_t c1 = (c0 + 1 + rng.below(3)) % 4;  // distinct corner
            copies.push_back(crops[c0]);
            copies.push_back(crops[c1]);
            int quarter = 1 + static_cast<int>(rng.below(3));
            copies.push_back(detail::rotate90(img, quarter));
        } else {
            for (auto& c : crops) copies.push_back(std::move(c));
            for (auto& r : rotations(img, plan.rotation_angles)) copies.push_back(std::move(r));
        }
        if (rng.next_double() < plan.noise_fraction)
            copies.push_back(add_gaussian_noise(img, plan.noise_sigma, rng));
        else
            copies.push_back(img);

        std::string stem = std::filesystem::path(rec.path).stem().string();
        for (std::size_t k = 0; k < copies.size(); ++k) {
            GrayImage sized = resize_bilinear(copies[k], plan.target_size, plan.target_size);
            std::string name = stem + "_aug" + std::to_string(k) + ".pgm";
            if (!emitted.insert(name).second)
                throw FormatError("duplicate output name " + name + "; input stems must be unique");
            write_pgm(sized, out_dir / name);
            out.records.push_back({name, rec.label});
        }
    }
    save_manifest(out, out_dir / "manifest.csv");
    return out;
}

}  // namespace cgc
