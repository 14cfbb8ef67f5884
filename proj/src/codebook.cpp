#include "nos/codebook.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

#include "nos/channel.hpp"
#include "nos/encoder.hpp"
#include "nos/neural.hpp"

namespace nos {

namespace {

constexpr char kMagic[4] = {'N', 'O', 'S', 'C'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

void check_shape(int V, int D, int M) {
    if (V < 1) throw std::invalid_argument("Codebook: V must be >= 1");
    if (D < 2 || D % 2 != 0) throw std::invalid_argument("Codebook: D must be even and positive");
    if (M < 1 || !is_power_of_two(static_cast<std::uint64_t>(M)))
        throw std::invalid_argument("Codebook: M must be a power of two");
}

template <typename T>
void put_le(std::vector<char>& buf, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
    return v;
}

void put_f32(std::vector<char>& buf, double x) { put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(x))); }

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

// Linear thresholds of the dB bin edges, so binning needs no log10.
const std::array<double, DbHistogram::bins + 1>& bin_edges_linear() {
    static const auto edges = [] {
        std::array<double, DbHistogram::bins + 1> e{};
        for (int i = 0; i <= DbHistogram::bins; ++i) e[static_cast<std::size_t>(i)] = std::pow(10.0, DbHistogram::bin_low(i) / 10.0);
        return e;
    }();
    return edges;
}

int bin_of(double linear_value) {
    const auto& e = bin_edges_linear();
    if (!(linear_value > 0.0)) return 0;
    const auto it = std::upper_bound(e.begin(), e.end(), linear_value);
    const int idx = static_cast<int>(it - e.begin()) - 1;
    return std::clamp(idx, 0, DbHistogram::bins - 1);
}

// Shared by the pre- and post-channel reports: columns of `words` are all
// codewords ordered (v, m).
CorrelationReport report_from_words(const CMat& words, int V, int M, double normalizer) {
    if (!(normalizer > 0.0)) throw std::invalid_argument("correlation_report: normalizer must be positive");
    CorrelationReport rep;
    rep.normalizer = normalizer;
    const Eigen::MatrixXd G = (words.adjoint() * words).real();
    const auto n = static_cast<Eigen::Index>(V) * M;
    double energy = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) energy += G(a, a);
    rep.mean_energy = energy / static_cast<double>(n);
    rep.min_intra = std::numeric_limits<double>::infinity();

    for (int i = 0; i < V; ++i) {
        for (int j = i; j < V; ++j) {
            for (int k = 0; k < M; ++k) {
                const Eigen::Index a = static_cast<Eigen::Index>(i) * M + k;
                for (int l = (i == j ? k + 1 : 0); l < M; ++l) {
                    const Eigen::Index b = static_cast<Eigen::Index>(j) * M + l;
                    const double c = G(a, b) / normalizer;
                    // Each unordered pair stands for both (a,b) and (b,a).
                    if (i != j) {
                        const double ac = std::abs(c);
                        rep.inter.hist.counts[static_cast<std::size_t>(bin_of(ac))] += 2;
                        rep.inter.hist.total += 2;
                        rep.inter.samples += 2;
                        rep.inter.max = std::max(rep.inter.max, ac);
                    } else {
                        rep.intra_total += 2;
                        rep.min_intra = std::min(rep.min_intra, c);
                        if (c > 0.0) {
                            rep.intra.hist.counts[static_cast<std::size_t>(bin_of(c))] += 2;
                            rep.intra.hist.total += 2;
                            rep.intra.samples += 2;
                            rep.intra.max = std::max(rep.intra.max, c);
                        }
                    }
                }
            }
        }
    }
    if (rep.intra_total == 0) rep.min_intra = 0.0;
    return rep;
}

}  // namespace

Codebook::Codebook(int V, int D, int M) : V_(V), D_(D), M_(M) {
    check_shape(V, D, M);
    slices_.assign(static_cast<std::size_t>(V), CMat::Zero(D / 2, M));
}

Codebook::Codebook(int V, int D, int M, std::vector<CMat> slices) : V_(V), D_(D), M_(M), slices_(std::move(slices)) {
    check_shape(V, D, M);
    if (slices_.size() != static_cast<std::size_t>(V)) throw std::invalid_argument("Codebook: slice count != V");
    for (const auto& s : slices_)
        if (s.rows() != D / 2 || s.cols() != M) throw std::invalid_argument("Codebook: slice shape != (D/2, M)");
}

double Codebook::max_energy_deviation() const {
    const double e = codeword_energy();
    double worst = 0.0;
    for (const auto& s : slices_)
        for (Eigen::Index m = 0; m < s.cols(); ++m) worst = std::max(worst, std::abs(s.col(m).squaredNorm() - e) / e);
    return worst;
}

void Codebook::validate(double rel_tol) const {
    const double dev = max_energy_deviation();
    if (!(dev <= rel_tol))
        throw CodebookError(CodebookError::Kind::energy_violation,
                            "codebook energy invariant violated: max relative deviation " + std::to_string(dev));
}

Codebook Codebook::rounded_to_float() const {
    Codebook out = *this;
    for (auto& s : out.slices_)
        s = s.unaryExpr([](const cplx& z) {
            return cplx(static_cast<float>(z.real()), static_cast<float>(z.imag()));
        });
    return out;
}

bool operator==(const Codebook& a, const Codebook& b) {
    if (a.V_ != b.V_ || a.D_ != b.D_ || a.M_ != b.M_) return false;
    for (std::size_t v = 0; v < a.slices_.size(); ++v)
        if (a.slices_[v] != b.slices_[v]) return false;
    return true;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::vector<char> buf;
    const std::size_t n = static_cast<std::size_t>(cb.V()) * cb.half_length() * cb.M();
    buf.reserve(kHeaderBytes + 8 * n);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_le<std::uint16_t>(buf, kVersion);
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(cb.V()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(cb.M()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(cb.D()));
    for (int part = 0; part < 2; ++part)
        for (int v = 0; v < cb.V(); ++v)
            for (int d = 0; d < cb.half_length(); ++d)
                for (int m = 0; m < cb.M(); ++m) {
                    const cplx z = cb.slice(v)(d, m);
                    put_f32(buf, part == 0 ? z.real() : z.imag());
                }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CodebookError(CodebookError::Kind::io, "cannot open " + path.string() + " for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw CodebookError(CodebookError::Kind::io, "write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CodebookError(CodebookError::Kind::io, "cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw CodebookError(CodebookError::Kind::bad_magic, "not a codebook file (bad magic): " + path.string());
    if (buf.size() < kHeaderBytes) throw CodebookError(CodebookError::Kind::shape_mismatch, "truncated codebook header");
    const auto version = get_le<std::uint16_t>(buf.data() + 4);
    if (version != kVersion)
        throw CodebookError(CodebookError::Kind::unsupported_version, "unsupported codebook version " + std::to_string(version));
    const int V = get_le<std::uint16_t>(buf.data() + 6);
    const auto M = get_le<std::uint32_t>(buf.data() + 8);
    const auto D = get_le<std::uint32_t>(buf.data() + 12);
    if (V < 1 || M < 1 || D < 2 || D % 2 != 0 || !is_power_of_two(M) || M > (1u << 24) || D > (1u << 20))
        throw CodebookError(CodebookError::Kind::shape_mismatch, "invalid codebook dimensions in header");
    const std::size_t n = static_cast<std::size_t>(V) * (D / 2) * M;
    if (buf.size() != kHeaderBytes + 8 * n)
        throw CodebookError(CodebookError::Kind::shape_mismatch,
                            "codebook payload is " + std::to_string(buf.size() - kHeaderBytes) + " bytes, header implies " +
                                std::to_string(8 * n));
    Codebook cb(V, static_cast<int>(D), static_cast<int>(M));
    const unsigned char* re = buf.data() + kHeaderBytes;
    const unsigned char* im = re + 4 * n;
    std::size_t i = 0;
    for (int v = 0; v < V; ++v)
        for (int d = 0; d < static_cast<int>(D / 2); ++d)
            for (int m = 0; m < static_cast<int>(M); ++m, ++i)
                cb.slice(v)(d, m) = cplx(get_f32(re + 4 * i), get_f32(im + 4 * i));
    cb.validate();
    return cb;
}

Codebook enumerate_codebook(const nn::EncoderWeights& weights, int V, int D, int M) {
    if (weights.dims.V != V || weights.dims.D != D || weights.dims.M != M ||
        weights.enc.size() != static_cast<std::size_t>(V))
        throw std::invalid_argument("enumerate_codebook: weights do not match (V, D, M)");
    weights.validate();
    Codebook cb(V, D, M);
    const double energy = cb.codeword_energy();
    for (int v = 0; v < V; ++v) {
        for (int m = 0; m < M; ++m) {
            RVec onehot = RVec::Zero(M);
            onehot(m) = 1.0;
            RVec out = weights.enc[static_cast<std::size_t>(v)].forward(onehot);
            const double nrm = out.norm();
            if (!(nrm > 0.0)) throw std::invalid_argument("enumerate_codebook: encoder produced a zero vector");
            out *= std::sqrt(energy) / nrm;
            cb.slice(v).col(m) = complexify(out);
        }
    }
    return cb;
}

PostChannelCodebook PostChannelCodebook::from_slices(std::vector<CMat> slices, int nt, int nr, int mc, int D) {
    if (slices.empty()) throw std::invalid_argument("PostChannelCodebook: no slices");
    PostChannelCodebook p;
    p.M_ = static_cast<int>(slices.front().cols());
    p.L_ = static_cast<int>(slices.front().rows());
    p.nt_ = nt;
    p.nr_ = nr;
    p.mc_ = mc;
    p.D_ = D;
    if (p.L_ != nr * mc) throw std::invalid_argument("PostChannelCodebook: length != nr * mc");
    p.norms_.resize(static_cast<Eigen::Index>(slices.size()), p.M_);
    for (std::size_t v = 0; v < slices.size(); ++v) {
        if (slices[v].rows() != p.L_ || slices[v].cols() != p.M_)
            throw std::invalid_argument("PostChannelCodebook: inconsistent slice shapes");
        p.norms_.row(static_cast<Eigen::Index>(v)) = slices[v].colwise().squaredNorm();
    }
    p.slices_ = std::move(slices);
    return p;
}

PostChannelCodebook apply_channel_to_codebook(const Codebook& cb, const CMat& H, int nt, int mc) {
    if (nt * mc != cb.half_length()) throw std::invalid_argument("apply_channel_to_codebook: nt*mc != D/2");
    if (H.cols() != nt) throw std::invalid_argument("apply_channel_to_codebook: H must have nt columns");
    const auto nr = static_cast<int>(H.rows());
    std::vector<CMat> out;
    out.reserve(static_cast<std::size_t>(cb.V()));
    for (int v = 0; v < cb.V(); ++v) {
        const CMat& C = cb.slice(v);
        CMat W(nr * mc, cb.M());
        // Time slot t occupies rows [t*nt, (t+1)*nt) of C and rows [t*nr, (t+1)*nr) of W.
        for (int t = 0; t < mc; ++t) W.middleRows(t * nr, nr).noalias() = H * C.middleRows(t * nt, nt);
        out.push_back(std::move(W));
    }
    return PostChannelCodebook::from_slices(std::move(out), nt, nr, mc, cb.D());
}

void DbHistogram::add(double linear_value) {
    ++counts[static_cast<std::size_t>(bin_of(linear_value))];
    ++total;
}

void DbHistogram::merge(const DbHistogram& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total += other.total;
}

double CorrelationSummary::max_db() const {
    return max > 0.0 ? 10.0 * std::log10(max) : -std::numeric_limits<double>::infinity();
}

void CorrelationReport::merge(const CorrelationReport& o) {
    const double n0 = static_cast<double>(realizations), n1 = static_cast<double>(o.realizations);
    mean_energy = (mean_energy * n0 + o.mean_energy * n1) / (n0 + n1);
    realizations += o.realizations;
    inter.hist.merge(o.inter.hist);
    inter.samples += o.inter.samples;
    inter.max = std::max(inter.max, o.inter.max);
    intra.hist.merge(o.intra.hist);
    intra.samples += o.intra.samples;
    intra.max = std::max(intra.max, o.intra.max);
    intra_total += o.intra_total;
    min_intra = std::min(min_intra, o.min_intra);
}

CorrelationReport correlation_report(const Codebook& cb, double normalizer) {
    CMat words(cb.half_length(), static_cast<Eigen::Index>(cb.V()) * cb.M());
    for (int v = 0; v < cb.V(); ++v) words.middleCols(static_cast<Eigen::Index>(v) * cb.M(), cb.M()) = cb.slice(v);
    return report_from_words(words, cb.V(), cb.M(), normalizer);
}

CorrelationReport correlation_report(const PostChannelCodebook& pccb, double normalizer) {
    CMat words(pccb.length(), static_cast<Eigen::Index>(pccb.V()) * pccb.M());
    for (int v = 0; v < pccb.V(); ++v) words.middleCols(static_cast<Eigen::Index>(v) * pccb.M(), pccb.M()) = pccb.slice(v);
    return report_from_words(words, pccb.V(), pccb.M(), normalizer);
}

CorrelationReport empirical_post_channel_report(const Codebook& cb, int n_channels, int nt, int nr, SeededRng& rng) {
    if (n_channels < 1) throw std::invalid_argument("empirical_post_channel_report: n_channels must be >= 1");
    if (cb.half_length() % nt != 0) throw std::invalid_argument("empirical_post_channel_report: nt must divide D/2");
    const int mc = cb.half_length() / nt;
    const double normalizer = nr * cb.codeword_energy();
    CorrelationReport total;
    for (int c = 0; c < n_channels; ++c) {
        const auto ch = ChannelRealization::draw(rng, nr, nt);
        auto rep = correlation_report(apply_channel_to_codebook(cb, ch.H, nt, mc), normalizer);
        if (c == 0)
            total = rep;
        else
            total.merge(rep);
    }
    return total;
}

void write_histogram_csv(const DbHistogram& h, std::ostream& os) {
    os << "bin_low_db,bin_high_db,count\n";
    for (int i = 0; i < DbHistogram::bins; ++i)
        os << DbHistogram::bin_low(i) << ',' << DbHistogram::bin_low(i + 1) << ',' << h.counts[static_cast<std::size_t>(i)] << '\n';
}

}  // namespace nos
