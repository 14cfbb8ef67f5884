#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nos/channel.hpp"
#include "nos/codebook.hpp"
#include "nos/kbest.hpp"
#include "nos/neural.hpp"
#include "nos/polar.hpp"

namespace nos::sim {

enum class System { nos, polar, nn_receiver };

System parse_system(const std::string& s);
std::string to_string(System s);

struct SimConfig {
    System system = System::nos;
    std::string codebook_path;
    std::string weights_path;

    int V = 4;
    int M = 256;
    int D = 64;
    int nt = 4;
    int nr = 4;

    std::vector<double> snr_db;

    int K = 16;
    int iter = 0;
    kbest::Sorting sorting = kbest::Sorting::per_layer;
    int list_size = 16;
    bool crc_aided = true;

    std::uint64_t min_errors = 100;
    std::uint64_t max_packets = 1000000;
    std::uint64_t batch = 256;  // packets between stopping-rule checks
    std::uint64_t seed = 1;
    int workers = 0;  // 0: NOS_WORKERS from the environment, else 1

    int mc() const { return D / (2 * nt); }
    int info_bits() const;
    void validate() const;
};

/// Sets one key of the flat config format. Throws on unknown keys or bad values.
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);
/// key = value lines; '#' starts a comment; blank lines are ignored.
SimConfig parse_config(std::istream& is);
SimConfig load_config(const std::filesystem::path& path);
std::string format_config(const SimConfig& cfg);

/// "a:b:step" (inclusive of b within 1e-9) or a comma separated list.
std::vector<double> parse_snr_list(const std::string& s);

/// Worker count: cfg.workers if positive, else NOS_WORKERS, else 1.
int resolve_workers(const SimConfig& cfg);

/// Artifacts shared read-only by all workers.
struct Artifacts {
    std::optional<Codebook> codebook;
    std::optional<nn::ReceiverWeights> receiver;
};

Artifacts load_artifacts(const SimConfig& cfg);

struct PacketOutcome {
    bool packet_error = false;
    std::uint64_t bit_errors = 0;
    std::uint64_t metric_evals = 0;
};

/// Simulates packet `index` at one SNR. All randomness comes from
/// SeededRng::derive(seed, index), so a packet index sees the same message,
/// channel and unit noise at every SNR and under every decoder setting.
PacketOutcome simulate_packet(const SimConfig& cfg, const Artifacts& art, const SnrPoint& snr, std::uint64_t index);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// 95% Wilson score interval for k successes out of n.
Interval wilson_interval(std::uint64_t k, std::uint64_t n);

struct PointResult {
    double snr_db = 0.0;
    std::uint64_t packets = 0;
    std::uint64_t packet_errors = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t info_bits_per_packet = 0;
    std::uint64_t metric_evals = 0;  // total over all packets
    double wall_seconds = 0.0;

    double per() const;
    double ber() const;
    Interval per_interval() const { return wilson_interval(packet_errors, packets); }
    double mean_metric_evals() const;
};

struct SimResult {
    std::vector<PointResult> points;
};

/// Runs every SNR point until min_errors packet errors or max_packets packets,
/// checking the rule after each batch. Packets inside a batch are spread over
/// the worker pool; the result does not depend on the worker count.
SimResult run_sweep(const SimConfig& cfg, const Artifacts& art);
SimResult run_sweep(const SimConfig& cfg);

struct MissPoint {
    double snr_db = 0.0;
    int iter = 0;
    std::uint64_t packets = 0;
    std::uint64_t misses = 0;

    double rate() const { return packets ? static_cast<double>(misses) / static_cast<double>(packets) : 0.0; }
};

/// Fraction of packets whose transmitted index tuple is absent from the final
/// K candidates, for each iter value on the same max_packets packets.
std::vector<MissPoint> run_candidate_miss_rate(const SimConfig& cfg, const Artifacts& art, const std::vector<int>& iters);

struct CsvRow {
    double snr_db = 0.0;
    std::uint64_t packets = 0;
    std::uint64_t pkt_errors = 0;
    double per = 0.0;
    double per_lo = 0.0;
    double per_hi = 0.0;
    double ber = 0.0;
    double metric_evals = 0.0;  // mean per packet

    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

CsvRow to_row(const PointResult& p);
/// Header snr_db,packets,pkt_errors,per,per_lo,per_hi,ber,metric_evals.
void write_csv(const SimResult& r, std::ostream& os);
std::vector<CsvRow> parse_csv(std::istream& is);

void write_miss_csv(const std::vector<MissPoint>& pts, std::ostream& os);

}  // namespace nos::sim
