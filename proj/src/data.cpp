#include "picardkit/data.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "picardkit/errors.hpp"
#include "picardkit/random.hpp"

namespace picardkit {
namespace {

constexpr double kMaxMixingCondition = 100.0;

enum Stream : std::uint64_t { kSources = 0, kMixing = 1, kNoise = 2, kInnovation = 3, kPatches = 4, kRotation = 5 };

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

void standardize_rows(Matrix& s) {
    const double t = static_cast<double>(s.cols());
    for (Index i = 0; i < s.rows(); ++i) {
        const double mean = s.row(i).sum() / t;
        s.row(i).array() -= mean;
        const double sd = std::sqrt(s.row(i).squaredNorm() / t);
        s.row(i) /= sd;
    }
}

double draw(Rng& rng, const SourceSpec& spec) {
    switch (spec.distribution) {
        case SourceDistribution::Laplace: return rng.laplace();
        case SourceDistribution::Uniform: return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
        case SourceDistribution::GaussMixture: {
            const double spread = std::sqrt(1.0 - spec.mixture_offset * spec.mixture_offset);
            const double centre = rng.uniform() < 0.5 ? -spec.mixture_offset : spec.mixture_offset;
            return centre + spread * rng.normal();
        }
    }
    return 0.0;
}

Matrix draw_mixing(Index n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, kMixing));
    Matrix a(n, n);
    for (;;) {
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
        }
        const Vector ev = sym_eig(a.transpose() * a).eigenvalues;
        if (ev(0) > 0.0 && std::sqrt(ev(n - 1) / ev(0)) <= kMaxMixingCondition) return a;
    }
}

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Whitespace/comment-aware token reader for PGM headers and P2 bodies.
class PgmCursor {
public:
    PgmCursor(const std::vector<char>& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

    long next_int(const char* what) {
        skip_space();
        const std::size_t begin = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (begin == pos_) {
            std::ostringstream msg;
            msg << name_ << ": expected " << what << " at byte offset " << begin;
            throw ParseError(msg.str());
        }
        return std::stol(std::string(bytes_.data() + begin, pos_ - begin));
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t k) { pos_ += k; }

private:
    void skip_space() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<char>& bytes_;
    std::string name_;
    std::size_t pos_ = 2;
};

std::uint64_t read_le64(const char* p) {
    std::uint64_t v;
    std::memcpy(&v, p, sizeof v);
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    return v;
}

void write_le64(std::ostream& out, std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    char buf[8];
    std::memcpy(buf, &v, sizeof v);
    out.write(buf, 8);
}

}  // namespace

std::string_view distribution_name(SourceDistribution d) {
    switch (d) {
        case SourceDistribution::Laplace: return "laplace";
        case SourceDistribution::Uniform: return "uniform";
        case SourceDistribution::GaussMixture: return "gauss-mixture";
    }
    return "unknown";
}

SourceDistribution parse_distribution(std::string_view name) {
    if (name == "laplace") return SourceDistribution::Laplace;
    if (name == "uniform") return SourceDistribution::Uniform;
    if (name == "gauss-mixture") return SourceDistribution::GaussMixture;
    throw ContractError("unknown source distribution '" + std::string(name) + "'");
}

Dataset generate_synthetic(Index n, Index t, std::uint64_t seed, const SourceSpec& spec) {
    if (n < 2) throw ContractError("generate_synthetic: need N >= 2");
    if (t < 10 * n * n) throw ContractError("generate_synthetic: need T >= 10 N^2");
    if (spec.distribution == SourceDistribution::GaussMixture &&
        !(std::abs(spec.mixture_offset) < 1.0)) {
        throw ContractError("generate_synthetic: mixture offset must lie in (-1, 1)");
    }

    Rng rng(derive_seed(seed, kSources));
    Matrix s(n, t);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < t; ++k) s(i, k) = draw(rng, spec);
    }
    standardize_rows(s);

    Dataset out;
    Matrix a = draw_mixing(n, seed);
    out.x = a * s;
    out.ground_truth = GroundTruth{std::move(a), std::move(s)};
    out.provenance.generator = "synthetic";
    out.provenance.params = {{"n", std::to_string(n)},
                             {"t", std::to_string(t)},
                             {"seed", std::to_string(seed)},
                             {"distribution", std::string(distribution_name(spec.distribution))}};
    if (spec.distribution == SourceDistribution::GaussMixture) {
        out.provenance.params["mixture_offset"] = fmt(spec.mixture_offset);
    }
    return out;
}

Matrix dependent_latents(Index n, Index t, std::uint64_t seed, double overcomplete_factor) {
    if (n < 2) throw ContractError("generate_dependent: need N >= 2");
    if (t < 2) throw ContractError("generate_dependent: need T >= 2");
    if (!(overcomplete_factor >= 1.0)) throw ContractError("generate_dependent: overcomplete_factor must be >= 1");
    const auto bases = static_cast<Index>(std::ceil(static_cast<double>(n) / overcomplete_factor));

    Rng rng(derive_seed(seed, kSources));
    Matrix base(bases, t);
    for (Index i = 0; i < bases; ++i) {
        for (Index k = 0; k < t; ++k) base(i, k) = rng.laplace();
    }
    standardize_rows(base);

    Rng inn(derive_seed(seed, kInnovation));
    Matrix latents(n, t);
    for (Index r = 0; r < n; ++r) {
        const Index own = r % bases;
        const Index next = (r + 1) % bases;
        for (Index k = 0; k < t; ++k) {
            const double innovation = std::sqrt(3.0) * (2.0 * inn.uniform() - 1.0);
            latents(r, k) = base(own, k) + 0.5 * base(next, k) + 0.3 * innovation;
        }
    }
    return latents;
}

Dataset generate_dependent(Index n, Index t, std::uint64_t seed, double overcomplete_factor,
                           double noise_level) {
    if (!(noise_level >= 0.0)) throw ContractError("generate_dependent: noise_level must be >= 0");
    const Matrix latents = dependent_latents(n, t, seed, overcomplete_factor);
    const Matrix a = draw_mixing(n, seed);

    Dataset out;
    out.x = a * latents;
    if (noise_level > 0.0) {
        Rng rng(derive_seed(seed, kNoise));
        for (Index k = 0; k < t; ++k) {
            for (Index i = 0; i < n; ++i) out.x(i, k) += noise_level * rng.normal();
        }
    }
    out.provenance.generator = "dependent";
    out.provenance.params = {{"n", std::to_string(n)},
                             {"t", std::to_string(t)},
                             {"seed", std::to_string(seed)},
                             {"overcomplete_factor", fmt(overcomplete_factor)},
                             {"noise_level", fmt(noise_level)}};
    return out;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
    if (n < 1) throw DimensionError("random_orthogonal: n must be positive");
    Rng rng(derive_seed(seed, kRotation));
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const std::vector<char> bytes = slurp(path);
    const std::string name = path.string();
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        throw FormatError(name + ": not a P2/P5 PGM file");
    }
    const bool binary = bytes[1] == '5';
    PgmCursor cur(bytes, name);
    GrayImage img;
    img.width = cur.next_int("width");
    img.height = cur.next_int("height");
    const long maxval = cur.next_int("maxval");
    if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535) {
        throw FormatError(name + ": invalid PGM header values");
    }
    const auto count = static_cast<std::size_t>(img.width * img.height);
    img.pixels.resize(count);

    if (binary) {
        cur.advance(1);  // single whitespace after maxval
        const std::size_t bpp = maxval > 255 ? 2 : 1;
        if (bytes.size() < cur.pos() + count * bpp) {
            throw FormatError(name + ": pixel data is truncated");
        }
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + cur.pos());
        for (std::size_t k = 0; k < count; ++k) {
            img.pixels[k] = bpp == 1 ? p[k] : static_cast<double>((p[2 * k] << 8) | p[2 * k + 1]);
        }
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            img.pixels[k] = static_cast<double>(cur.next_int("pixel value"));
        }
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "P5\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
    for (double v : image.pixels) {
        const long q = std::lround(std::clamp(v, 0.0, static_cast<double>(maxval)));
        if (maxval > 255) out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
    }
}

Dataset extract_patches(const GrayImage& image, Index edge, Index count, std::uint64_t seed) {
    if (edge < 1 || count < 1) throw DimensionError("extract_patches: edge and count must be positive");
    if (image.width < edge || image.height < edge) {
        std::ostringstream msg;
        msg << "extract_patches: image " << image.width << "x" << image.height << " is smaller than patch edge "
            << edge;
        throw DimensionError(msg.str());
    }
    Rng rng(derive_seed(seed, kPatches));
    const auto rows = static_cast<std::uint64_t>(image.height - edge + 1);
    const auto cols = static_cast<std::uint64_t>(image.width - edge + 1);

    Dataset out;
    out.x.resize(edge * edge, count);
    for (Index c = 0; c < count; ++c) {
        const auto r0 = static_cast<Index>(rng.below(rows));
        const auto c0 = static_cast<Index>(rng.below(cols));
        for (Index dr = 0; dr < edge; ++dr) {
            for (Index dc = 0; dc < edge; ++dc) out.x(dr * edge + dc, c) = image.at(r0 + dr, c0 + dc);
        }
    }
    out.provenance.generator = "patches";
    out.provenance.params = {{"edge", std::to_string(edge)},
                             {"count", std::to_string(count)},
                             {"seed", std::to_string(seed)},
                             {"image_width", std::to_string(image.width)},
                             {"image_height", std::to_string(image.height)}};
    return out;
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::F64Binary;
}

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    const std::vector<char> bytes = slurp(path);
    const std::string name = path.string();
    if (bytes.empty()) throw FormatError(name + ": file is empty");

    if (format == MatrixFormat::F64Binary) {
        if (bytes.size() < 16) throw FormatError(name + ": header is truncated");
        const std::uint64_t rows = read_le64(bytes.data());
        const std::uint64_t cols = read_le64(bytes.data() + 8);
        if (rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 40)) {
            throw FormatError(name + ": implausible dimensions in header");
        }
        if (bytes.size() != 16 + 8 * rows * cols) {
            std::ostringstream msg;
            msg << name << ": header says " << rows << "x" << cols << " but payload holds "
                << (bytes.size() - 16) / 8.0 << " values";
            throw FormatError(msg.str());
        }
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        const char* p = bytes.data() + 16;
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j, p += 8) m(i, j) = std::bit_cast<double>(read_le64(p));
        }
        return m;
    }

    const std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    auto parse_fields = [&](const std::string& l, std::size_t expect, auto&& sink) {
        std::size_t col = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t end = std::min(l.find(',', pos), l.size());
            std::size_t b = pos;
            std::size_t e = end;
            while (b < e && std::isspace(static_cast<unsigned char>(l[b]))) ++b;
            while (e > b && std::isspace(static_cast<unsigned char>(l[e - 1]))) --e;
            double v = 0.0;
            const auto res = std::from_chars(l.data() + b, l.data() + e, v);
            if (b == e || res.ec != std::errc() || res.ptr != l.data() + e) {
                std::ostringstream msg;
                msg << name << ": line " << line_no << ", column " << col + 1 << ": cannot parse '"
                    << l.substr(b, e - b) << "' as a number";
                throw ParseError(msg.str());
            }
            sink(col, v);
            ++col;
            if (end == l.size()) break;
            pos = end + 1;
        }
        if (expect != 0 && col != expect) {
            std::ostringstream msg;
            msg << name << ": line " << line_no << " has " << col << " values, expected " << expect;
            throw FormatError(msg.str());
        }
        return col;
    };

    if (!std::getline(in, line)) throw FormatError(name + ": missing header line");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    double dims[2] = {0, 0};
    parse_fields(line, 2, [&](std::size_t c, double v) { dims[c] = v; });
    if (dims[0] < 1 || dims[1] < 1 || dims[0] != std::floor(dims[0]) || dims[1] != std::floor(dims[1])) {
        throw FormatError(name + ": header must be 'rows,cols' with positive integers");
    }
    Matrix m(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
    Index row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= m.rows()) {
            std::ostringstream msg;
            msg << name << ": more than " << m.rows() << " data rows (line " << line_no << ")";
            throw FormatError(msg.str());
        }
        parse_fields(line, static_cast<std::size_t>(m.cols()),
                     [&](std::size_t c, double v) { m(row, static_cast<Index>(c)) = v; });
        ++row;
    }
    if (row != m.rows()) {
        std::ostringstream msg;
        msg << name << ": header declares " << m.rows() << " rows, found " << row;
        throw FormatError(msg.str());
    }
    return m;
}

void save_matrix(const std::filesystem::path& path, MatrixFormat format, const Matrix& x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    if (format == MatrixFormat::F64Binary) {
        write_le64(out, static_cast<std::uint64_t>(x.rows()));
        write_le64(out, static_cast<std::uint64_t>(x.cols()));
        for (Index i = 0; i < x.rows(); ++i) {
            for (Index j = 0; j < x.cols(); ++j) write_le64(out, std::bit_cast<std::uint64_t>(x(i, j)));
        }
    } else {
        out << x.rows() << ',' << x.cols() << '\n';
        char buf[32];
        for (Index i = 0; i < x.rows(); ++i) {
            for (Index j = 0; j < x.cols(); ++j) {
                const auto res = std::to_chars(buf, buf + sizeof buf, x(i, j), std::chars_format::general, 17);
                if (j > 0) out.put(',');
                out.write(buf, res.ptr - buf);
            }
            out.put('\n');
        }
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace picardkit
