#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "picardkit/linalg.hpp"

namespace picardkit {

enum class SourceDistribution { Laplace, Uniform, GaussMixture };

std::string_view distribution_name(SourceDistribution d);
SourceDistribution parse_distribution(std::string_view name);

/// Per-source density. Every distribution is scaled to unit variance; the
/// Gaussian mixture is 0.5 N(-offset, 1 - offset^2) + 0.5 N(offset, 1 - offset^2).
struct SourceSpec {
    SourceDistribution distribution = SourceDistribution::Laplace;
    double mixture_offset = 0.9;
};

/// Generator name plus the parameters needed to rebuild a dataset.
struct Provenance {
    std::string generator;
    std::map<std::string, std::string> params;
};

struct GroundTruth {
    Matrix a;  // mixing matrix
    Matrix s;  // sources
};

struct Dataset {
    Matrix x;
    Provenance provenance;
    std::optional<GroundTruth> ground_truth;  // X == A S exactly when present
};

/// X = A S with N independent sources (each row standardized to exact zero
/// mean and unit variance) and A drawn with i.i.d. N(0,1) entries, redrawn
/// until cond(A) <= 100. Requires N >= 2 and T >= 10 N^2.
Dataset generate_synthetic(Index n, Index t, std::uint64_t seed, const SourceSpec& spec = {});

/// Latent signals of generate_dependent: ceil(N / overcomplete_factor)
/// Laplace bases shared cyclically, each latent adding half of the next
/// base (leakage) and a small uniform innovation.
Matrix dependent_latents(Index n, Index t, std::uint64_t seed, double overcomplete_factor);

/// X = A S' + noise_level * Gaussian noise with S' from dependent_latents.
/// The ICA model does not hold; no ground truth is attached.
Dataset generate_dependent(Index n, Index t, std::uint64_t seed, double overcomplete_factor,
                           double noise_level);

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the signs of R's diagonal folded into Q).
Matrix random_orthogonal(Index n, std::uint64_t seed);

/// Grayscale raster, row-major.
struct GrayImage {
    Index width = 0;
    Index height = 0;
    std::vector<double> pixels;

    double at(Index row, Index col) const { return pixels[static_cast<std::size_t>(row * width + col)]; }
};

/// Reads binary (P5) or ASCII (P2) PGM.
GrayImage read_pgm(const std::filesystem::path& path);
/// Writes binary PGM; pixel values are rounded and clamped to [0, maxval].
void write_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval = 255);

/// Draws `count` patch corners uniformly (with replacement) and flattens each
/// edge x edge patch row-major into one column: (edge^2) x count.
Dataset extract_patches(const GrayImage& image, Index edge, Index count, std::uint64_t seed);

enum class MatrixFormat { Csv, F64Binary };

/// ".csv" selects Csv, anything else F64Binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

/// csv: header line "rows,cols" then one comma-separated line per row.
/// f64-binary: rows, cols as little-endian uint64, then row-major
/// little-endian doubles.
Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const std::filesystem::path& path, MatrixFormat format, const Matrix& x);

inline Matrix load_matrix(const std::filesystem::path& path) { return load_matrix(path, format_for_path(path)); }
inline void save_matrix(const std::filesystem::path& path, const Matrix& x) {
    save_matrix(path, format_for_path(path), x);
}

}  // namespace picardkit
