#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "cgc/error.hpp"
#include "cgc/image.hpp"
#include "cgc/tensor.hpp"

namespace cgc {

struct PointI {
    int x = 0;
    int y = 0;
    bool operator==(const PointI&) const = default;
};

struct PointD {
    double x = 0.0;
    double y = 0.0;
};

// Ordered boundary points of one 8-connected foreground component.
struct Contour {
    std::vector<PointI> points;
};

// Corners of a minimum-area enclosing rectangle, in cyclic order.
struct RotatedRect {
    std::array<PointD, 4> vertices;
    double area = 0.0;
};

// Integer pixel box, max coordinates exclusive.
struct CropBox {
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;

    int width() const { return max_x - min_x; }
    int height() const { return max_y - min_y; }
};

struct DetectParams {
    double sigma = 1.5;  // Gaussian blur strength
    int ksize = 5;       // Gaussian kernel size, odd
    bool morph_close = false;  // optional 3x3 closing before contouring
};

namespace detail {
inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}

// Step 1: 3x3 Sobel gradients in X and Y, edge-replicated borders.
// Output tensors have shape [height, width].
inline std::pair<Tensor, Tensor> sobel_gradients(const GrayImage& img) {
    if (img.width < 3 || img.height < 3) throw SizeError("sobel needs at least a 3x3 image");
    const std::size_t h = static_cast<std::size_t>(img.height);
    const std::size_t w = static_cast<std::size_t>(img.width);
    Tensor gx({h, w});
    Tensor gy({h, w});
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double sx = 0.0, sy = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                int yy = detail::clampi(y + dy, 0, img.height - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = detail::clampi(x + dx, 0, img.width - 1);
                    double v = img.at(xx, yy);
                    sx += kx[dy + 1][dx + 1] * v;
                    sy += ky[dy + 1][dx + 1] * v;
                }
            }
            gx(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = sx;
            gy(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = sy;
        }
    }
    return {std::move(gx), std::move(gy)};
}

// Step 2: clamp(|gx| - |gy|, 0, 255) quantized to u8. Keeps regions with a
// strong horizontal gradient and weak vertical gradient.
inline GrayImage gradient_emphasis(const Tensor& gx, const Tensor& gy) {
    if (!gx.same_shape(gy) || gx.rank() != 2)
        throw ShapeMismatch("gradient_emphasis expects two [h,w] tensors of equal shape");
    const int h = static_cast<int>(gx.dim(0));
    const int w = static_cast<int>(gx.dim(1));
    GrayImage out(w, h);
    for (std::size_t i = 0; i < gx.numel(); ++i) {
        double v = std::abs(gx[i]) - std::abs(gy[i]);
        v = std::clamp(v, 0.0, 255.0);
        out.pixels[i] = static_cast<std::uint8_t>(std::llround(v));
    }
    return out;
}

// Step 3 (pre-quantization): separable normalized Gaussian with
// edge-replicated borders, values kept in float64.
inline Tensor gaussian_blur_values(const GrayImage& img, double sigma, int ksize) {
    if (sigma <= 0.0) throw ParamError("gaussian sigma must be > 0");
    if (ksize < 3 || ksize % 2 == 0) throw ParamError("gaussian ksize must be odd and >= 3");

    const int r = ksize / 2;
    std::vector<double> k(static_cast<std::size_t>(ksize));
    double sum = 0.0;
    for (int i = 0; i < ksize; ++i) {
        double d = i - r;
        k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[static_cast<std::size_t>(i + r)] * img.at(detail::clampi(x + i, 0, w - 1), y);
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    Tensor out({static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[static_cast<std::size_t>(i + r)] *
                       tmp[static_cast<std::size_t>(detail::clampi(y + i, 0, h - 1)) * w + x];
            out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
        }
    return out;
}

inline GrayImage gaussian_blur(const GrayImage& img, double sigma, int ksize) {
    Tensor v = gaussian_blur_values(img, sigma, ksize);
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < v.numel(); ++i)
        out.pixels[i] = static_cast<std::uint8_t>(std::llround(std::clamp(v[i], 0.0, 255.0)));
    return out;
}

// Step 4: Otsu's maximum between-class variance threshold over t in 0..254,
// ties broken by the smallest t. binary(p) = 255 if p > t else 0.
inline std::pair<std::uint8_t, GrayImage> otsu_threshold(const GrayImage& img) {
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t p : img.pixels) hist[p]++;

    int levels = 0;
    for (auto c : hist)
        if (c > 0) ++levels;
    if (levels < 2) throw DegenerateImage("otsu needs at least two distinct gray levels");

    const double total = static_cast<double>(img.pixels.size());
    std::uint64_t sum_all = 0;
    for (int v = 0; v < 256; ++v) sum_all += hist[static_cast<std::size_t>(v)] * static_cast<std::uint64_t>(v);

    int best_t = 0;
    double best_var = -1.0;
    std::uint64_t w0 = 0, s0 = 0;
    for (int t = 0; t <= 254; ++t) {
        w0 += hist[static_cast<std::size_t>(t)];
        s0 += hist[static_cast<std::size_t>(t)] * static_cast<std::uint64_t>(t);
        std::uint64_t w1 = img.pixels.size() - w0;
        if (w0 == 0 || w1 == 0) continue;
        double mu0 = static_cast<double>(s0) / static_cast<double>(w0);
        double mu1 = static_cast<double>(sum_all - s0) / static_cast<double>(w1);
        double var = (static_cast<double>(w0) / total) * (static_cast<double>(w1) / total) *
                     (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }

    GrayImage binary(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        binary.pixels[i] = img.pixels[i] > best_t ? 255 : 0;
    return {static_cast<std::uint8_t>(best_t), binary};
}

namespace detail {

// Moore boundary following around one 8-connected component, starting from
// the component's first pixel in row-major scan order (its W/N sides are
// background by construction). The neighborhood is scanned clockwise from
// the backtrack pixel; the walk stops when it is about to repeat the first
// move out of the start pixel.
inline std::vector<PointI> trace_boundary(const GrayImage& bin, int sx, int sy) {
    // Neighbor order: clockwise starting at W (y grows downward).
    static constexpr int dx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static constexpr int dy8[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    auto fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < bin.width && y < bin.height && bin.at(x, y) != 0;
    };
    auto dir_index = [](int dx, int dy) {
        for (int k = 0; k < 8; ++k)
            if (dx8[k] == dx && dy8[k] == dy) return k;
        return 0;
    };

    std::vector<PointI> pts;
    pts.push_back({sx, sy});

    int cx = sx, cy = sy;
    int bdir = 0;  // direction from current pixel to its backtrack (background) pixel
    int first_move = -1;

    const std::size_t guard = 8 * bin.pixels.size() + 64;
    for (std::size_t step = 0; step < guard; ++step) {
        int found = -1, prev = bdir;
        for (int k = 1; k <= 8; ++k) {
            int d = (bdir + k) % 8;
            if (fg(cx + dx8[d], cy + dy8[d])) {
                found = d;
                break;
            }
            prev = d;
        }
        if (found < 0) break;  // isolated pixel

        if (cx == sx && cy == sy) {
            if (first_move < 0)
                first_move = found;
            else if (found == first_move)
                break;  // about to retrace the boundary
        }

        int nbx = cx + dx8[prev], nby = cy + dy8[prev];  // last background examined
        cx += dx8[found];
        cy += dy8[found];
        bdir = dir_index(nbx - cx, nby - cy);
        pts.push_back({cx, cy});
    }
    // The final arrival back at the start closes the loop; drop it.
    if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    return pts;
}

// Collapses runs of equal unit steps (horizontal, vertical or exact diagonal)
// to their two endpoints. The contour is treated as a closed loop.
inline std::vector<PointI> compress_contour(const std::vector<PointI>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<PointI> out;
    for (std::size_t i = 0; i < n; ++i) {
        const PointI& prev = pts[(i + n - 1) % n];
        const PointI& cur = pts[i];
        const PointI& next = pts[(i + 1) % n];
        int dx0 = cur.x - prev.x, dy0 = cur.y - prev.y;
        int dx1 = next.x - cur.x, dy1 = next.y - cur.y;
        if (dx0 != dx1 || dy0 != dy1) out.push_back(cur);
    }
    return out.empty() ? std::vector<PointI>{pts.front()} : out;
}

inline GrayImage dilate3x3(const GrayImage& in) {
    GrayImage out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            std::uint8_t m = 0;
            for (int dy = -1; dy <= 1 && m == 0; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx, yy = y + dy;
                    if (xx >= 0 && yy >= 0 && xx < in.width && yy < in.height && in.at(xx, yy) != 0) {
                        m = 255;
                        break;
                    }
                }
            out.at(x, y) = m;
        }
    return out;
}

inline GrayImage erode3x3(const GrayImage& in) {
    GrayImage out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            std::uint8_t m = 255;
            for (int dy = -1; dy <= 1 && m != 0; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx, yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= in.width || yy >= in.height || in.at(xx, yy) == 0) {
                        m = 0;
                        break;
                    }
                }
            out.at(x, y) = m;
        }
    return out;
}

}  // namespace detail

// Step 5: one contour per 8-connected foreground component, Moore boundary
// following, then (optionally) compressed so collinear runs keep only their
// endpoints. Components with fewer than 3 boundary points are dropped.
inline std::vector<Contour> find_contours(const GrayImage& binary, bool compress = true) {
    std::vector<int> label(binary.pixels.size(), -1);
    std::vector<Contour> contours;
    int next_label = 0;

    std::vector<PointI> stack;
    for (int y = 0; y < binary.height; ++y) {
        for (int x = 0; x < binary.width; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * binary.width + x;
            if (binary.pixels[idx] == 0 || label[idx] >= 0) continue;

            // Flood-fill the component (8-connected); (x,y) is its first
            // pixel in scan order, which is where the boundary trace starts.
            int comp = next_label++;
            stack.clear();
            stack.push_back({x, y});
            label[idx] = comp;
            while (!stack.empty()) {
                PointI p = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int xx = p.x + dx, yy = p.y + dy;
                        if (xx < 0 || yy < 0 || xx >= binary.width || yy >= binary.height) continue;
                        std::size_t j = static_cast<std::size_t>(yy) * binary.width + xx;
                        if (binary.pixels[j] != 0 && label[j] < 0) {
                            label[j] = comp;
                            stack.push_back({xx, yy});
                        }
                    }
            }

            std::vector<PointI> pts = detail::trace_boundary(binary, x, y);
            if (pts.size() < 3) continue;
            contours.push_back({compress ? detail::compress_contour(pts) : std::move(pts)});
        }
    }
    return contours;
}

namespace detail {

inline double cross(const PointD& o, const PointD& a, const PointD& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain; returns strictly convex hull in CCW order.
inline std::vector<PointD> convex_hull(std::vector<PointD> pts) {
    std::sort(pts.begin(), pts.end(), [](const PointD& a, const PointD& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const PointD& a, const PointD& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<PointD> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace detail

// Step 6: minimum-area enclosing rectangle via convex hull plus rotating
// calipers. The optimal rectangle has one side collinear with a hull edge;
// the three support points advance monotonically as the edge rotates.
inline RotatedRect min_area_rect(const std::vector<PointI>& points) {
    std::vector<PointD> pd;
    pd.reserve(points.size());
    for (const auto& p : points) pd.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});

    std::vector<PointD> hull = detail::convex_hull(std::move(pd));
    if (hull.size() < 3) throw DegenerateGeometry("min_area_rect needs >= 3 non-collinear points");

    const std::size_t n = hull.size();
    auto proj_u = [&](std::size_t i, double ux, double uy) { return hull[i].x * ux + hull[i].y * uy; };

    // Support indices: max along edge direction, max along normal, min along
    // edge direction. Each advances at most n times over the whole sweep.
    std::size_t right = 0, top = 0, left = 0;
    bool first = true;
    RotatedRect best;
    best.area = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < n; ++k) {
        const PointD& a = hull[k];
        const PointD& b = hull[(k + 1) % n];
        double ex = b.x - a.x, ey = b.y - a.y;
        double len = std::hypot(ex, ey);
        if (len == 0.0) continue;
        double ux = ex / len, uy = ey / len;  // edge direction
        double vx = -uy, vy = ux;             // inward normal (hull is CCW)

        if (first) {
            for (std::size_t i = 1; i < n; ++i) {
                if (proj_u(i, ux, uy) > proj_u(right, ux, uy)) right = i;
                if (proj_u(i, vx, vy) > proj_u(top, vx, vy)) top = i;
                if (proj_u(i, ux, uy) < proj_u(left, ux, uy)) left = i;
            }
            first = false;
        } else {
            while (proj_u((right + 1) % n, ux, uy) >= proj_u(right, ux, uy)) right = (right + 1) % n;
            while (proj_u((top + 1) % n, vx, vy) >= proj_u(top, vx, vy)) top = (top + 1) % n;
            while (proj_u((left + 1) % n, ux, uy) <= proj_u(left, ux, uy)) left = (left + 1) % n;
        }

        double u_min = proj_u(left, ux, uy);
        double u_max = proj_u(right, ux, uy);
        double v_base = a.x * vx + a.y * vy;
        double v_max = proj_u(top, vx, vy);
        double area = (u_max - u_min) * (v_max - v_base);
        if (area < best.area) {
            best.area = area;
            best.vertices = {PointD{ux * u_min + vx * v_base, uy * u_min + vy * v_base},
                             PointD{ux * u_max + vx * v_base, uy * u_max + vy * v_base},
                             PointD{ux * u_max + vx * v_max, uy * u_max + vy * v_max},
                             PointD{ux * u_min + vx * v_max, uy * u_min + vy * v_max}};
        }
    }
    if (!std::isfinite(best.area)) throw DegenerateGeometry("degenerate hull");
    return best;
}

// Step 7: axis-aligned envelope of the four vertices, rounded outward and
// clamped to the image. Max coordinates are exclusive pixel bounds.
inline CropBox crop_box_of(const RotatedRect& rect, int img_w, int img_h) {
    double mnx = rect.vertices[0].x, mxx = rect.vertices[0].x;
    double mny = rect.vertices[0].y, mxy = rect.vertices[0].y;
    for (const auto& v : rect.vertices) {
        mnx = std::min(mnx, v.x);
        mxx = std::max(mxx, v.x);
        mny = std::min(mny, v.y);
        mxy = std::max(mxy, v.y);
    }
    CropBox box;
    box.min_x = detail::clampi(static_cast<int>(std::floor(mnx)), 0, img_w);
    box.min_y = detail::clampi(static_cast<int>(std::floor(mny)), 0, img_h);
    box.max_x = detail::clampi(static_cast<int>(std::ceil(mxx)), 0, img_w);
    box.max_y = detail::clampi(static_cast<int>(std::ceil(mxy)), 0, img_h);
    if (box.min_x >= box.max_x || box.min_y >= box.max_y)
        throw EmptyCrop("crop box collapsed after clamping");
    return box;
}

inline GrayImage crop(const GrayImage& img, const CropBox& box) {
    GrayImage out(box.width(), box.height());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = img.at(box.min_x + x, box.min_y + y);
    return out;
}

// Intermediate results of the detection pipeline, for debug dumps.
struct DetectTrace {
    GrayImage gx_abs;
    GrayImage emphasis;
    GrayImage blurred;
    GrayImage binary;
    CropBox box;
};

// Steps 1-7 composed. Among all contours, the one whose minimum-area
// rectangle is largest wins; the crop is taken from the original image.
inline GrayImage detect_and_crop(const GrayImage& img, const DetectParams& params = {},
                                 DetectTrace* trace = nullptr) {
    if (img.width < 32 || img.height < 32)
        throw SizeError("detect_and_crop needs at least a 32x32 image");

    auto [gx, gy] = sobel_gradients(img);
    GrayImage emph = gradient_emphasis(gx, gy);
    GrayImage blurred = gaussian_blur(emph, params.sigma, params.ksize);

    std::uint8_t t;
    GrayImage binary(1, 1);
    try {
        std::tie(t, binary) = otsu_threshold(blurred);
    } catch (const DegenerateImage&) {
        throw NoObjectFound("image has no gradient structure to segment");
    }

    GrayImage mask = params.morph_close ? detail::erode3x3(detail::dilate3x3(binary)) : binary;

    std::vector<Contour> contours = find_contours(mask);
    bool found = false;
    RotatedRect best;
    double best_area = -1.0;
    for (const auto& c : contours) {
        try {
            RotatedRect r = min_area_rect(c.points);
            if (r.area > best_area) {
                best_area = r.area;
                best = r;
                found = true;
            }
        } catch (const DegenerateGeometry&) {
            // collinear speck; ignore
        }
    }
    if (!found) throw NoObjectFound("no usable foreground component");

    CropBox box = crop_box_of(best, img.width, img.height);
    if (trace) {
        GrayImage gxa(img.width, img.height);
        for (std::size_t i = 0; i < gxa.pixels.size(); ++i)
            gxa.pixels[i] = static_cast<std::uint8_t>(std::llround(std::clamp(std::abs(gx[i]), 0.0, 255.0)));
        trace->gx_abs = std::move(gxa);
        trace->emphasis = emph;
        trace->blurred = blurred;
        trace->binary = binary;
        trace->box = box;
    }
    return crop(img, box);
}

}  // namespace cgc
