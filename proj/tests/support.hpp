#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <unistd.h>
#include <vector>

#include "thermoscope/data/types.hpp"
#include "thermoscope/detection/types.hpp"
#include "thermoscope/eval/voc_eval.hpp"
#include "thermoscope/image.hpp"
#include "thermoscope/random.hpp"
#include "thermoscope/tensor.hpp"

namespace tstest {

namespace fs = std::filesystem;
using namespace thermoscope;

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("thermoscope_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = lo + (hi - lo) * uniform01(rng);
    return t;
}

inline Image random_image(int h, int w, Rng& rng) { return random_tensor({3, h, w}, rng, 0.0, 1.0); }

inline double rel_err(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Plain loop over channel pairs, no library code involved.
inline std::vector<std::vector<double>> gram_oracle(const Tensor& f) {
    const int c = f.channels(), h = f.height(), w = f.width();
    std::vector<std::vector<double>> g(c, std::vector<double>(c, 0.0));
    for (int a = 0; a < c; ++a)
        for (int b = 0; b < c; ++b) {
            double s = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) s += f.at(a, y, x) * f.at(b, y, x);
            g[a][b] = s / (double(c) * h * w);
        }
    return g;
}

inline double iou_oracle(const data::BoundingBox& a, const data::BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

// Brute-force all-point AP. For every prefix of the ranking the top-k
// detections are matched again from scratch, so the PR point at rank k never
// depends on bookkeeping carried over from rank k-1.
inline std::optional<double> ap_oracle(const std::vector<detection::Detection>& dets,
                                       const eval::GroundTruthByImage& gts, double thr = 0.5) {
    std::size_t n_gt = 0;
    for (const auto& [_, list] : gts)
        for (const auto& g : list) n_gt += g.difficult ? 0 : 1;
    if (n_gt == 0) return std::nullopt;

    std::vector<std::size_t> rank(dets.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });

    // outcome of the k-th ranked detection given the first k: 1 tp, 0 fp, -1 ignored
    auto outcome_at = [&](std::size_t k) {
        std::map<std::string, std::vector<bool>> used;
        int last = 0;
        for (std::size_t r = 0; r <= k; ++r) {
            const auto& d = dets[rank[r]];
            auto it = gts.find(d.image_id);
            last = 0;
            if (it == gts.end()) continue;
            auto& u = used[d.image_id];
            u.resize(it->second.size(), false);
            double best = -1;
            std::size_t arg = it->second.size();
            for (std::size_t g = 0; g < it->second.size(); ++g) {
                if (u[g] && !it->second[g].difficult) continue;
                const double v = iou_oracle(d.box, it->second[g].box);
                if (v > best) {
                    best = v;
                    arg = g;
                }
            }
            if (arg < it->second.size() && best >= thr) {
                if (it->second[arg].difficult) {
                    last = -1;
                } else {
                    u[arg] = true;
                    last = 1;
                }
            }
        }
        return last;
    };

    std::vector<int> outcome;
    for (std::size_t k = 0; k < rank.size(); ++k) {
        int o = outcome_at(k);
        if (o >= 0) outcome.push_back(o);
    }
    // precision at each counted rank, then the right-to-left envelope
    std::vector<double> prec(outcome.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        tp += outcome[k];
        prec[k] = double(tp) / double(k + 1);
    }
    double ap = 0;
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        if (outcome[k] != 1) continue;
        double best = 0;
        for (std::size_t j = k; j < outcome.size(); ++j) best = std::max(best, prec[j]);
        ap += best / double(n_gt);
    }
    return ap;
}

inline detection::Detection det(const std::string& image, const std::string& label, double conf, double x1,
                                double y1, double x2, double y2) {
    return {image, {x1, y1, x2, y2}, label, conf};
}

inline data::ObjectAnnotation ann(const std::string& label, double x1, double y1, double x2, double y2,
                                  bool difficult = false) {
    return {{x1, y1, x2, y2}, label, difficult};
}

}  // namespace tstest
