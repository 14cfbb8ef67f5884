#include "nos/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nos/crc.hpp"
#include "nos/encoder.hpp"

namespace nos::sim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
    return x;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    const long long x = to_int(key, v);
    if (x < 0) throw std::invalid_argument("config: " + key + " must be non-negative");
    return static_cast<std::uint64_t>(x);
}

double to_double(const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: " + key + " expects a boolean, got '" + v + "'");
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Runs fn(i) for i in [begin, end) on `workers` threads, interleaved.
template <class Fn>
void parallel_for(std::uint64_t begin, std::uint64_t end, int workers, Fn&& fn) {
    const std::uint64_t n = end - begin;
    const auto w = static_cast<std::uint64_t>(std::max(1, workers));
    if (w == 1 || n < 2) {
        for (std::uint64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    const std::uint64_t used = std::min(w, n);
    pool.reserve(used);
    for (std::uint64_t t = 0; t < used; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::uint64_t i = begin + t; i < end; i += used) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

std::uint64_t count_bit_errors(const BitString& a, const BitString& b) { return a.hamming(b); }

}  // namespace

System parse_system(const std::string& s) {
    if (s == "nos") return System::nos;
    if (s == "polar") return System::polar;
    if (s == "nn_receiver" || s == "nn-receiver" || s == "nn") return System::nn_receiver;
    throw std::invalid_argument("unknown system '" + s + "' (nos | polar | nn_receiver)");
}

std::string to_string(System s) {
    switch (s) {
        case System::nos: return "nos";
        case System::polar: return "polar";
        case System::nn_receiver: return "nn_receiver";
    }
    return "?";
}

int SimConfig::info_bits() const { return V * log2_exact(static_cast<std::uint64_t>(M)) - crc::CrcSpec::degree; }

void SimConfig::validate() const {
    if (V < 1) throw std::invalid_argument("config: V must be >= 1");
    if (M < 2 || !is_power_of_two(static_cast<std::uint64_t>(M))) throw std::invalid_argument("config: M must be a power of two >= 2");
    if (D < 2 || D % 2 != 0) throw std::invalid_argument("config: D must be even");
    if (nt < 1 || nr < 1) throw std::invalid_argument("config: nt and nr must be >= 1");
    if ((D / 2) % nt != 0) throw std::invalid_argument("config: nt must divide D/2");
    if (info_bits() < 1) throw std::invalid_argument("config: V*log2(M) must exceed the 11 CRC bits");
    if (min_errors < 1) throw std::invalid_argument("config: min_errors must be >= 1");
    if (max_packets < 1) throw std::invalid_argument("config: max_packets must be >= 1");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    for (double s : snr_db)
        if (std::isnan(s)) throw std::invalid_argument("config: NaN SNR");
    if (system == System::nos || system == System::nn_receiver) {
        kbest::DecodeConfig{K, iter, sorting}.validate();
    }
    if (system == System::polar) {
        if (list_size < 1) throw std::invalid_argument("config: list_size must be >= 1");
        if (nt > 6) throw std::invalid_argument("config: ML detection supports nt <= 6");
        if (info_bits() + crc::CrcSpec::degree > D) throw std::invalid_argument("config: polar frame longer than D coded bits");
    }
}

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "system") cfg.system = parse_system(v);
    else if (key == "codebook") cfg.codebook_path = v;
    else if (key == "weights") cfg.weights_path = v;
    else if (key == "V") cfg.V = static_cast<int>(to_int(key, v));
    else if (key == "M") cfg.M = static_cast<int>(to_int(key, v));
    else if (key == "D") cfg.D = static_cast<int>(to_int(key, v));
    else if (key == "nt") cfg.nt = static_cast<int>(to_int(key, v));
    else if (key == "nr") cfg.nr = static_cast<int>(to_int(key, v));
    else if (key == "snr_db") cfg.snr_db = parse_snr_list(v);
    else if (key == "K") cfg.K = static_cast<int>(to_int(key, v));
    else if (key == "iter") cfg.iter = static_cast<int>(to_int(key, v));
    else if (key == "sorting") cfg.sorting = kbest::parse_sorting(v);
    else if (key == "list_size") cfg.list_size = static_cast<int>(to_int(key, v));
    else if (key == "crc_aided") cfg.crc_aided = to_bool(key, v);
    else if (key == "min_errors") cfg.min_errors = to_count(key, v);
    else if (key == "max_packets") cfg.max_packets = to_count(key, v);
    else if (key == "batch") cfg.batch = to_count(key, v);
    else if (key == "seed") cfg.seed = to_count(key, v);
    else if (key == "workers") cfg.workers = static_cast<int>(to_int(key, v));
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

SimConfig parse_config(std::istream& is) {
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    SimConfig cfg = parse_config(in);
    // Relative artifact paths are taken relative to the config file.
    const auto base = path.parent_path();
    for (auto* p : {&cfg.codebook_path, &cfg.weights_path})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    return cfg;
}

std::string format_config(const SimConfig& cfg) {
    std::ostringstream os;
    os << "system = " << to_string(cfg.system) << '\n';
    if (!cfg.codebook_path.empty()) os << "codebook = " << cfg.codebook_path << '\n';
    if (!cfg.weights_path.empty()) os << "weights = " << cfg.weights_path << '\n';
    os << "V = " << cfg.V << "\nM = " << cfg.M << "\nD = " << cfg.D << "\nnt = " << cfg.nt << "\nnr = " << cfg.nr << '\n';
    os << "snr_db = ";
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) os << (i ? "," : "") << fmt_double(cfg.snr_db[i]);
    os << "\nK = " << cfg.K << "\niter = " << cfg.iter << "\nsorting = " << kbest::to_string(cfg.sorting)
       << "\nlist_size = " << cfg.list_size << "\ncrc_aided = " << (cfg.crc_aided ? "true" : "false")
       << "\nmin_errors = " << cfg.min_errors << "\nmax_packets = " << cfg.max_packets << "\nbatch = " << cfg.batch
       << "\nseed = " << cfg.seed << '\n';
    return os.str();
}

std::vector<double> parse_snr_list(const std::string& s) {
    const std::string t = trim(s);
    std::vector<double> out;
    if (t.empty()) return out;
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(trim(part));
        if (parts.size() != 3) throw std::invalid_argument("SNR range must be a:b:step");
        const double a = to_double(parts[0]), b = to_double(parts[1]), step = to_double(parts[2]);
        if (!(step > 0.0) || b < a) throw std::invalid_argument("SNR range needs step > 0 and b >= a");
        const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
        for (long long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    std::stringstream ss(t);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part == "inf" || part == "+inf") out.push_back(std::numeric_limits<double>::infinity());
        else out.push_back(to_double(part));
    }
    return out;
}

int resolve_workers(const SimConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("NOS_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0) return w;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

Artifacts load_artifacts(const SimConfig& cfg) {
    Artifacts art;
    if (cfg.system == System::nos || cfg.system == System::nn_receiver) {
        if (cfg.codebook_path.empty()) throw std::invalid_argument("config: system " + to_string(cfg.system) + " needs a codebook");
        art.codebook = load_codebook(cfg.codebook_path);
    }
    if (cfg.system == System::nn_receiver) {
        if (cfg.weights_path.empty()) throw std::invalid_argument("config: system nn_receiver needs a weights file");
        art.receiver = nn::load_receiver_weights(cfg.weights_path);
    }
    return art;
}

PacketOutcome simulate_packet(const SimConfig& cfg, const Artifacts& art, const SnrPoint& snr, std::uint64_t index) {
    SeededRng rng = SeededRng::derive(cfg.seed, index);
    const BitString msg = random_bits(rng, static_cast<std::size_t>(cfg.info_bits()));
    const ChannelRealization ch = ChannelRealization::draw(rng, cfg.nr, cfg.nt);
    PacketOutcome out;

    if (cfg.system == System::polar) {
        const polar::PolarSpec spec(cfg.info_bits(), crc::CrcSpec::degree, cfg.D, cfg.list_size);
        const auto r = polar::qpsk_pipeline(msg, ch, snr, rng, spec, !cfg.crc_aided);
        const auto& dec = cfg.crc_aided ? r.ca : *r.plain;
        const BitString& best = dec.frame ? *dec.frame : dec.candidates.front().frame;
        const BitString got = best.slice(0, msg.size());
        out.bit_errors = count_bit_errors(got, msg);
        out.packet_error = !dec.frame || got != msg;
        return out;
    }

    const Codebook& cb = *art.codebook;
    const PacketLayout layout = PacketLayout::for_codebook(cb.V(), cb.M());
    const EncodedPacket pkt = encode(msg, cb, layout);
    const CMat S = reshape_space_time(pkt.s, cfg.nt, cfg.mc());
    const CMat Y = transmit(S, ch, snr, rng);

    if (cfg.system == System::nn_receiver) {
        const RVec x = nn::residual_detect(Y, ch.H, *art.receiver, snr.sigma2);
        const auto idx = nn::hard_decisions(nn::decode_probs(x, *art.receiver));
        const BitString got = indices_to_frame(idx, layout).slice(0, msg.size());
        out.bit_errors = count_bit_errors(got, msg);
        out.packet_error = got != msg;
        return out;
    }

    const PostChannelCodebook pccb = apply_channel_to_codebook(cb, ch.H, cfg.nt, cfg.mc());
    const auto res = kbest::kbest_decode(vectorize(Y), pccb, {cfg.K, cfg.iter, cfg.sorting}, layout);
    const BitString got = res.bits ? *res.bits : indices_to_frame(res.candidates.front().indices, layout).slice(0, msg.size());
    out.bit_errors = count_bit_errors(got, msg);
    out.packet_error = !res.crc_pass || got != msg;
    out.metric_evals = res.stats.total_metric_evals();
    return out;
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n) {
    if (n == 0) return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double PointResult::per() const { return packets ? static_cast<double>(packet_errors) / static_cast<double>(packets) : 0.0; }

double PointResult::ber() const {
    const double bits = static_cast<double>(packets) * static_cast<double>(info_bits_per_packet);
    return bits > 0.0 ? static_cast<double>(bit_errors) / bits : 0.0;
}

double PointResult::mean_metric_evals() const {
    return packets ? static_cast<double>(metric_evals) / static_cast<double>(packets) : 0.0;
}

SimResult run_sweep(const SimConfig& cfg, const Artifacts& art) {
    cfg.validate();
    if ((cfg.system != System::polar) && (!art.codebook || art.codebook->V() != cfg.V || art.codebook->M() != cfg.M ||
                                          art.codebook->D() != cfg.D))
        throw std::invalid_argument("run_sweep: codebook missing or its (V, M, D) differs from the config");
    if (cfg.system == System::nn_receiver && !art.receiver) throw std::invalid_argument("run_sweep: receiver weights missing");
    const int workers = resolve_workers(cfg);

    SimResult result;
    for (double snr_db : cfg.snr_db) {
        const SnrPoint snr = SnrPoint::from_db(snr_db);
        const auto t0 = std::chrono::steady_clock::now();
        PointResult pt;
        pt.snr_db = snr_db;
        pt.info_bits_per_packet = static_cast<std::uint64_t>(cfg.info_bits());
        std::vector<PacketOutcome> outs;
        while (pt.packet_errors < cfg.min_errors && pt.packets < cfg.max_packets) {
            const std::uint64_t begin = pt.packets;
            const std::uint64_t end = std::min(cfg.max_packets, begin + cfg.batch);
            outs.assign(end - begin, {});
            parallel_for(begin, end, workers, [&](std::uint64_t i) { outs[i - begin] = simulate_packet(cfg, art, snr, i); });
            for (const auto& o : outs) {
                pt.packet_errors += o.packet_error ? 1 : 0;
                pt.bit_errors += o.bit_errors;
                pt.metric_evals += o.metric_evals;
            }
            pt.packets = end;
        }
        pt.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.points.push_back(pt);
    }
    return result;
}

SimResult run_sweep(const SimConfig& cfg) { return run_sweep(cfg, load_artifacts(cfg)); }

std::vector<MissPoint> run_candidate_miss_rate(const SimConfig& cfg, const Artifacts& art, const std::vector<int>& iters) {
    cfg.validate();
    if (cfg.system != System::nos) throw std::invalid_argument("miss rate needs system = nos");
    if (!art.codebook) throw std::invalid_argument("miss rate: codebook missing");
    for (int it : iters)
        if (it < 0) throw std::invalid_argument("miss rate: iter values must be >= 0");
    const Codebook& cb = *art.codebook;
    const PacketLayout layout = PacketLayout::for_codebook(cb.V(), cb.M());
    const int workers = resolve_workers(cfg);

    std::vector<MissPoint> out;
    for (double snr_db : cfg.snr_db) {
        const SnrPoint snr = SnrPoint::from_db(snr_db);
        std::vector<std::vector<std::uint8_t>> miss(iters.size(), std::vector<std::uint8_t>(cfg.max_packets, 0));
        parallel_for(0, cfg.max_packets, workers, [&](std::uint64_t i) {
            SeededRng rng = SeededRng::derive(cfg.seed, i);
            const BitString msg = random_bits(rng, static_cast<std::size_t>(layout.info_bits));
            const ChannelRealization ch = ChannelRealization::draw(rng, cfg.nr, cfg.nt);
            const EncodedPacket pkt = encode(msg, cb, layout);
            const CMat Y = transmit(reshape_space_time(pkt.s, cfg.nt, cfg.mc()), ch, snr, rng);
            const PostChannelCodebook pccb = apply_channel_to_codebook(cb, ch.H, cfg.nt, cfg.mc());
            const CVec y = vectorize(Y);
            for (std::size_t k = 0; k < iters.size(); ++k) {
                const auto res = kbest::kbest_decode(y, pccb, {cfg.K, iters[k], cfg.sorting}, layout);
                const bool found = std::any_of(res.candidates.begin(), res.candidates.end(),
                                               [&](const kbest::RankedCandidate& c) { return c.indices == pkt.indices; });
                miss[k][i] = found ? 0 : 1;
            }
        });
        for (std::size_t k = 0; k < iters.size(); ++k) {
            MissPoint mp;
            mp.snr_db = snr_db;
            mp.iter = iters[k];
            mp.packets = cfg.max_packets;
            for (auto m : miss[k]) mp.misses += m;
            out.push_back(mp);
        }
    }
    return out;
}

CsvRow to_row(const PointResult& p) {
    const Interval ci = p.per_interval();
    return {p.snr_db, p.packets, p.packet_errors, p.per(), ci.lo, ci.hi, p.ber(), p.mean_metric_evals()};
}

void write_csv(const SimResult& r, std::ostream& os) {
    os << "snr_db,packets,pkt_errors,per,per_lo,per_hi,ber,metric_evals\n";
    for (const auto& p : r.points) {
        const CsvRow row = to_row(p);
        os << fmt_double(row.snr_db) << ',' << row.packets << ',' << row.pkt_errors << ',' << fmt_double(row.per) << ','
           << fmt_double(row.per_lo) << ',' << fmt_double(row.per_hi) << ',' << fmt_double(row.ber) << ','
           << fmt_double(row.metric_evals) << '\n';
    }
}

std::vector<CsvRow> parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "snr_db,packets,pkt_errors,per,per_lo,per_hi,ber,metric_evals")
        throw std::invalid_argument("parse_csv: unexpected header");
    std::vector<CsvRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
        if (f.size() != 8) throw std::invalid_argument("parse_csv: expected 8 columns");
        CsvRow r;
        r.snr_db = f[0] == "inf" ? std::numeric_limits<double>::infinity() : to_double(f[0]);
        r.packets = to_count("packets", f[1]);
        r.pkt_errors = to_count("pkt_errors", f[2]);
        r.per = to_double(f[3]);
        r.per_lo = to_double(f[4]);
        r.per_hi = to_double(f[5]);
        r.ber = to_double(f[6]);
        r.metric_evals = to_double(f[7]);
        rows.push_back(r);
    }
    return rows;
}

void write_miss_csv(const std::vector<MissPoint>& pts, std::ostream& os) {
    os << "snr_db,iter,packets,misses,miss_rate,miss_lo,miss_hi\n";
    for (const auto& p : pts) {
        const Interval ci = wilson_interval(p.misses, p.packets);
        os << fmt_double(p.snr_db) << ',' << p.iter << ',' << p.packets << ',' << p.misses << ',' << fmt_double(p.rate())
           << ',' << fmt_double(ci.lo) << ',' << fmt_double(ci.hi) << '\n';
    }
}

}  // namespace nos::sim
