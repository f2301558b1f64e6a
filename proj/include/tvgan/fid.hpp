// Copyright (c) 2026, The tvgan Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Frechet distance between Gaussian fits of feature distributions.
//
//   d^2 = |mu_a - mu_b|^2 + tr(S_a) + tr(S_b) - 2 tr((S_a S_b)^(1/2))
//
// The cross term tr((S_a S_b)^(1/2)) equals the sum of singular values of
// S_a^(1/2) S_b^(1/2): those are the square roots of the eigenvalues of the
// symmetric PSD matrix S_a^(1/2) S_b S_a^(1/2). Taking singular values avoids
// square-rooting round-off eigenvalues when a covariance is rank deficient.
//
// The shipped extractors are desk-scale stand-ins, not Inception-v3 pool3
// activations, so scores are not comparable to published FID values.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvgan/checkpoint.hpp"
#include "tvgan/data.hpp"
#include "tvgan/networks.hpp"

namespace tvgan {

inline constexpr const char* kFidReferenceNote = "reference=not-comparable-to-inception-v3-fid";

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Column means and the unbiased (N - 1) covariance of an N x d feature
/// matrix, symmetrized.
inline GaussianStats fit_gaussian(const Eigen::MatrixXd& features) {
  const auto n = features.rows();
  if (n < 2) {
    throw DimensionError("fit_gaussian needs at least 2 samples, got " + std::to_string(n));
  }
  GaussianStats s;
  s.count = static_cast<std::size_t>(n);
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

inline GaussianStats fit_gaussian(const Array<double>& features) {
  if (features.rank() != 2) throw DimensionError("fit_gaussian expects an (N, d) feature array");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      features.data().data(), static_cast<Eigen::Index>(features.dim(0)),
      static_cast<Eigen::Index>(features.dim(1)));
  return fit_gaussian(Eigen::MatrixXd(m));
}

/// Principal square root of a symmetric PSD matrix via symmetric
/// eigendecomposition; negative eigenvalues are clamped to 0. Rejects
/// inputs whose asymmetry exceeds `tolerance` relative to max(1, max|A|).
inline Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a, double tolerance = 1e-8) {
  if (a.rows() != a.cols()) throw DimensionError("sqrtm_psd needs a square matrix");
  if (a.size() == 0) return a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tolerance * scale)) {
    std::ostringstream os;
    os << "sqrtm_psd: matrix is not symmetric (max |A - A^T| = " << asym << ")";
    throw std::invalid_argument(os.str());
  }
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("sqrtm_psd: eigendecomposition failed");
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

/// Negative results above -kFidClampThreshold * max(1, tr S_a + tr S_b) are
/// round-off and clamp to 0 (with a warning); anything lower is an error.
inline constexpr double kFidClampThreshold = 1e-8;

inline double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("frechet_distance: feature dims differ (" + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Eigen::MatrixXd root_a = sqrtm_psd(a.covariance);
  const Eigen::MatrixXd root_b = sqrtm_psd(b.covariance);
  const Eigen::MatrixXd product = root_a * root_b;
  const double cross = Eigen::BDCSVD<Eigen::MatrixXd>(product).singularValues().sum();
  const double traces = a.covariance.trace() + b.covariance.trace();
  const double d2 = mean_term + traces - 2.0 * cross;
  if (d2 < 0.0) {
    if (d2 < -kFidClampThreshold * std::max(1.0, traces)) {
      std::ostringstream os;
      os << "frechet_distance: large negative value " << d2 << " (inputs not PSD?)";
      throw NumericError(os.str());
    }
    std::clog << "warning: frechet_distance round-off " << d2 << " clamped to 0\n";
    return 0.0;
  }
  return d2;
}

// ---------------------------------------------------------------------------
// Feature extractors

/// Deterministic map from images (B, 1, H, W) to features (B, dim).
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Eigen::MatrixXd extract(const Array<double>& images) const = 0;

 protected:
  static void check_batch(const Array<double>& images) {
    if (images.rank() != 4 || images.dim(1) != 1) {
      throw DimensionError("feature extractors expect (B, 1, H, W) images, got " + to_string(images.shape()));
    }
  }
  static Image slice(const Array<double>& images, std::size_t b) {
    const std::size_t h = images.dim(2), w = images.dim(3);
    Image img(h, w);
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(b * h * w), h * w, img.values.begin());
    return img;
  }
};

/// Flattened 16x16 downsample (box average when the size divides by 16,
/// bilinear otherwise); dim 256.
class PixelExtractor final : public FeatureExtractor {
 public:
  static constexpr std::size_t kSide = 16;

  std::string name() const override { return "pixels"; }
  std::size_t dim() const override { return kSide * kSide; }

  Eigen::MatrixXd extract(const Array<double>& images) const override {
    check_batch(images);
    const std::size_t B = images.dim(0), H = images.dim(2), W = images.dim(3);
    Eigen::MatrixXd out(B, dim());
    for (std::size_t b = 0; b < B; ++b) {
      Image img = slice(images, b);
      if (H % kSide == 0 && W % kSide == 0) {
        const std::size_t fh = H / kSide, fw = W / kSide;
        for (std::size_t r = 0; r < kSide; ++r) {
          for (std::size_t c = 0; c < kSide; ++c) {
            double s = 0;
            for (std::size_t i = 0; i < fh; ++i) {
              for (std::size_t j = 0; j < fw; ++j) s += img.at(r * fh + i, c * fw + j);
            }
            out(b, r * kSide + c) = s / static_cast<double>(fh * fw);
          }
        }
      } else {
        const Image small = resize_bilinear(img, kSide, kSide);
        for (std::size_t i = 0; i < dim(); ++i) out(b, i) = small.values[i];
      }
    }
    return out;
  }
};

/// First k coefficients, in zigzag (u + v, then u) order, of the orthonormal
/// 2-D DCT-II of the whole image.
class DctExtractor final : public FeatureExtractor {
 public:
  explicit DctExtractor(std::size_t k = 64) : k_(k) {
    if (k == 0) throw ConfigError("dct extractor needs k >= 1");
  }

  std::string name() const override { return "dct:" + std::to_string(k_); }
  std::size_t dim() const override { return k_; }

  Eigen::MatrixXd extract(const Array<double>& images) const override {
    check_batch(images);
    const std::size_t B = images.dim(0), H = images.dim(2), W = images.dim(3);
    if (k_ > H * W) throw DimensionError("dct extractor: k exceeds the number of coefficients");
    const Eigen::MatrixXd ch = basis(H), cw = basis(W);
    const auto order = zigzag(H, W);
    Eigen::MatrixXd out(B, k_);
    for (std::size_t b = 0; b < B; ++b) {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
          images.data().data() + b * H * W, static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(W));
      const Eigen::MatrixXd coeffs = ch * x * cw.transpose();
      for (std::size_t i = 0; i < k_; ++i) {
        out(b, i) = coeffs(static_cast<Eigen::Index>(order[i].first), static_cast<Eigen::Index>(order[i].second));
      }
    }
    return out;
  }

 private:
  static Eigen::MatrixXd basis(std::size_t n) {
    Eigen::MatrixXd c(n, n);
    const double N = static_cast<double>(n);
    for (std::size_t u = 0; u < n; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
      for (std::size_t x = 0; x < n; ++x) {
        c(u, x) = a * std::cos(std::numbers::pi * (2.0 * x + 1.0) * u / (2.0 * N));
      }
    }
    return c;
  }

  static std::vector<std::pair<std::size_t, std::size_t>> zigzag(std::size_t h, std::size_t w) {
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (std::size_t s = 0; s < h + w - 1; ++s) {
      for (std::size_t u = 0; u <= s; ++u) {
        if (u < h && s - u < w) order.emplace_back(u, s - u);
      }
    }
    return order;
  }

  std::size_t k_;
};

/// Flattened convolutional-trunk activations of a discriminator loaded from
/// a checkpoint, evaluated in eval mode.
class DiscriminatorExtractor final : public FeatureExtractor {
 public:
  DiscriminatorExtractor(const std::filesystem::path& checkpoint, const GanSpec& spec)
      : path_(checkpoint.string()), disc_(std::make_unique<Discriminator<double>>(spec.discriminator, 0)) {
    restore_network(read_checkpoint(checkpoint, spec), disc_->params());
  }

  std::string name() const override { return "checkpoint:" + path_; }
  std::size_t dim() const override { return disc_->spec().feature_dim(); }

  Eigen::MatrixXd extract(const Array<double>& images) const override {
    check_batch(images);
    Tape<double> tape(false);
    const auto f = disc_->features(tape, constant(images), Mode::eval);
    Eigen::MatrixXd out(f.dim(0), f.dim(1));
    for (std::size_t i = 0; i < f.dim(0); ++i) {
      for (std::size_t j = 0; j < f.dim(1); ++j) out(i, j) = f.value()[i * f.dim(1) + j];
    }
    return out;
  }

 private:
  std::string path_;
  std::unique_ptr<Discriminator<double>> disc_;
};

/// "pixels", "dct", "dct:<k>", or "checkpoint:<path>" (needs `spec`).
inline std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name,
                                                        const std::optional<GanSpec>& spec = std::nullopt) {
  if (name == "pixels") return std::make_unique<PixelExtractor>();
  if (name == "dct") return std::make_unique<DctExtractor>();
  if (name.starts_with("dct:")) {
    std::size_t k = 0;
    try {
      k = std::stoul(name.substr(4));
    } catch (const std::logic_error&) {
      throw ConfigError("bad dct coefficient count in '" + name + "'");
    }
    return std::make_unique<DctExtractor>(k);
  }
  if (name.starts_with("checkpoint:")) {
    if (!spec) throw ConfigError("checkpoint extractor needs the model architecture");
    return std::make_unique<DiscriminatorExtractor>(name.substr(11), *spec);
  }
  throw ConfigError("unknown feature extractor '" + name + "' (expected pixels, dct, dct:<k>, checkpoint:<path>)");
}

// ---------------------------------------------------------------------------
// Scoring

/// Yields batches of (B, 1, H, W) images until exhausted.
using ImageSource = std::function<std::optional<Array<double>>()>;

/// Serves `images` in batches of `batch_size`.
inline ImageSource image_source(std::vector<Image> images, std::size_t batch_size = 64) {
  auto data = std::make_shared<std::vector<Image>>(std::move(images));
  auto pos = std::make_shared<std::size_t>(0);
  return [data, pos, batch_size]() -> std::optional<Array<double>> {
    if (*pos >= data->size()) return std::nullopt;
    const std::size_t end = std::min(data->size(), *pos + batch_size);
    std::vector<const Image*> ptrs;
    for (std::size_t i = *pos; i < end; ++i) ptrs.push_back(&(*data)[i]);
    *pos = end;
    return stack_images<double>(ptrs);
  };
}

inline Eigen::MatrixXd extract_all(ImageSource& source, const FeatureExtractor& extractor) {
  std::vector<Eigen::MatrixXd> parts;
  Eigen::Index rows = 0;
  while (auto batch = source()) {
    parts.push_back(extractor.extract(*batch));
    rows += parts.back().rows();
  }
  Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(extractor.dim()));
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    all.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return all;
}

struct FidReport {
  double score = 0.0;
  std::string extractor;
  std::size_t n_real = 0;
  std::size_t n_generated = 0;

  /// fid=<value> extractor=<name> n_real=<n> n_gen=<n> reference=...
  std::string line() const {
    std::ostringstream os;
    os.precision(10);
    os << "fid=" << score << " extractor=" << extractor << " n_real=" << n_real << " n_gen=" << n_generated
       << ' ' << kFidReferenceNote;
    return os.str();
  }
};

inline FidReport fid_score(ImageSource real, ImageSource generated, const FeatureExtractor& extractor) {
  const auto fr = extract_all(real, extractor);
  const auto fg = extract_all(generated, extractor);
  if (fr.rows() == 0 || fg.rows() == 0) throw DataError("fid_score: an image stream is empty");
  const auto d = static_cast<Eigen::Index>(extractor.dim());
  if (fr.rows() <= d || fg.rows() <= d) {
    std::clog << "warning: fid with " << fr.rows() << "/" << fg.rows() << " samples for " << d
              << "-dimensional features; covariances are rank deficient\n";
  }
  FidReport report;
  report.score = frechet_distance(fit_gaussian(fr), fit_gaussian(fg));
  report.extractor = extractor.name();
  report.n_real = static_cast<std::size_t>(fr.rows());
  report.n_generated = static_cast<std::size_t>(fg.rows());
  return report;
}

}  // namespace tvgan
