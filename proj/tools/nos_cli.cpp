#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nos/channel.hpp"
#include "nos/codebook.hpp"
#include "nos/crc.hpp"
#include "nos/encoder.hpp"
#include "nos/kbest.hpp"
#include "nos/neural.hpp"
#include "nos/sim.hpp"

namespace {

using namespace nos;

struct Overrides {
    std::string config;
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;
};

// Registers one option per config key; values are applied on top of the file.
void add_config_options(CLI::App* app, Overrides& ov) {
    app->add_option("--config", ov.config, "Key = value config file");
    const std::vector<std::pair<std::string, std::string>> keys = {
        {"--system", "system"},         {"--codebook", "codebook"},       {"--weights", "weights"},
        {"-V", "V"},                    {"-M", "M"},                      {"-D", "D"},
        {"--nt", "nt"},                 {"--nr", "nr"},                   {"--snr-db", "snr_db"},
        {"-K", "K"},                    {"--iter", "iter"},               {"--sorting", "sorting"},
        {"--list-size", "list_size"},   {"--crc-aided", "crc_aided"},     {"--min-errors", "min_errors"},
        {"--max-packets", "max_packets"}, {"--batch", "batch"},           {"--seed", "seed"},
        {"--workers", "workers"},
    };
    for (const auto& [flag, key] : keys) {
        const std::string k = key;
        app->add_option_function<std::string>(flag, [&ov, k](const std::string& v) { ov.values[k] = v; },
                                              "Override config key '" + key + "'");
    }
    app->add_option("--set", ov.sets, "Override any key: key=value (repeatable)");
}

sim::SimConfig build_config(const Overrides& ov) {
    sim::SimConfig cfg = ov.config.empty() ? sim::SimConfig{} : sim::load_config(ov.config);
    for (const auto& [k, v] : ov.values) sim::apply_setting(cfg, k, v);
    for (const auto& s : ov.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        sim::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::string db(double linear) {
    if (linear <= 0.0) return "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 10.0 * std::log10(linear));
    return buf;
}

void print_report(const char* title, const CorrelationReport& r) {
    std::printf("%s (normalizer %.6g, %llu realization(s))\n", title, r.normalizer,
                static_cast<unsigned long long>(r.realizations));
    std::printf("  mean codeword energy  %.6g\n", r.mean_energy);
    std::printf("  inter: %llu entries, max %.6g (%s dB)\n", static_cast<unsigned long long>(r.inter.samples), r.inter.max,
                db(r.inter.max).c_str());
    std::printf("  intra: %llu positive of %llu entries, max %.6g (%s dB), min %.6g\n",
                static_cast<unsigned long long>(r.intra.samples), static_cast<unsigned long long>(r.intra_total), r.intra.max,
                db(r.intra.max).c_str(), r.min_intra);
}

void write_hist(const std::string& path, const DbHistogram& h) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_histogram_csv(h, out);
}

int cmd_simulate(const Overrides& ov, const std::string& out_path) {
    const sim::SimConfig cfg = build_config(ov);
    const sim::SimResult r = sim::run_sweep(cfg);
    if (out_path.empty() || out_path == "-") {
        sim::write_csv(r, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        sim::write_csv(r, out);
    }
    for (const auto& p : r.points)
        std::fprintf(stderr, "snr %g dB: %llu/%llu packet errors, PER %.3e, %.1f s\n", p.snr_db,
                     static_cast<unsigned long long>(p.packet_errors), static_cast<unsigned long long>(p.packets), p.per(),
                     p.wall_seconds);
    return 0;
}

int cmd_miss_rate(const Overrides& ov, const std::string& iters_s, const std::string& out_path) {
    sim::SimConfig cfg = build_config(ov);
    std::vector<int> iters;
    std::stringstream ss(iters_s);
    std::string part;
    while (std::getline(ss, part, ',')) iters.push_back(std::stoi(part));
    if (iters.empty()) iters = {0, cfg.V / 2, cfg.V};
    const auto pts = sim::run_candidate_miss_rate(cfg, sim::load_artifacts(cfg), iters);
    if (out_path.empty() || out_path == "-") {
        sim::write_miss_csv(pts, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        sim::write_miss_csv(pts, out);
    }
    return 0;
}

int cmd_analyze(const std::string& cb_path, int channels, int nt, int nr, std::uint64_t seed, const std::string& hist_prefix) {
    const Codebook cb = load_codebook(cb_path);
    std::printf("codebook V=%d M=%d D=%d, codeword energy %.6g, max relative deviation %.3e\n", cb.V(), cb.M(), cb.D(),
                cb.codeword_energy(), cb.max_energy_deviation());
    const CorrelationReport pre = correlation_report(cb, cb.codeword_energy());
    print_report("pre-channel", pre);
    if (!hist_prefix.empty()) {
        write_hist(hist_prefix + "_pre_inter.csv", pre.inter.hist);
        write_hist(hist_prefix + "_pre_intra.csv", pre.intra.hist);
    }
    if (channels > 0) {
        SeededRng rng(seed);
        const CorrelationReport post = empirical_post_channel_report(cb, channels, nt, nr, rng);
        print_report("post-channel", post);
        std::printf("  mean energy / (nr*D/2V) = %.4f\n", post.mean_energy / (nr * cb.codeword_energy()));
        if (!hist_prefix.empty()) {
            write_hist(hist_prefix + "_post_inter.csv", post.inter.hist);
            write_hist(hist_prefix + "_post_intra.csv", post.intra.hist);
        }
    }
    return 0;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + (v[i] < 0 ? std::string("-") : std::to_string(v[i]));
    return s;
}

int cmd_decode_one(const Overrides& ov, std::uint64_t packet, int show) {
    const sim::SimConfig cfg = build_config(ov);
    if (cfg.system != sim::System::nos) throw std::invalid_argument("decode-one needs system = nos");
    if (cfg.snr_db.empty()) throw std::invalid_argument("decode-one needs one snr_db value");
    const sim::Artifacts art = sim::load_artifacts(cfg);
    const Codebook& cb = *art.codebook;
    const PacketLayout layout = PacketLayout::for_codebook(cb.V(), cb.M());
    const SnrPoint snr = SnrPoint::from_db(cfg.snr_db.front());

    SeededRng rng = SeededRng::derive(cfg.seed, packet);
    const BitString msg = random_bits(rng, static_cast<std::size_t>(layout.info_bits));
    const ChannelRealization ch = ChannelRealization::draw(rng, cfg.nr, cfg.nt);
    const EncodedPacket pkt = encode(msg, cb, layout);
    const CMat Y = transmit(reshape_space_time(pkt.s, cfg.nt, cfg.mc()), ch, snr, rng);
    const PostChannelCodebook pccb = apply_channel_to_codebook(cb, ch.H, cfg.nt, cfg.mc());
    const CVec y = vectorize(Y);

    std::printf("packet %llu  snr %g dB  sigma2 %.6g  K=%d iter=%d sorting=%s\n", static_cast<unsigned long long>(packet),
                snr.snr_db, snr.sigma2, cfg.K, cfg.iter, kbest::to_string(cfg.sorting).c_str());
    std::printf("transmitted indices [%s]  ||y||^2 = %.6g\n", join(pkt.indices).c_str(), y.squaredNorm());
    const double true_score = (y - [&] {
                                  CVec u = CVec::Zero(pccb.length());
                                  for (int v = 0; v < cb.V(); ++v) u += pccb.slice(v).col(pkt.indices[static_cast<std::size_t>(v)]);
                                  return u;
                              }())
                                  .squaredNorm() -
                              y.squaredNorm();
    std::printf("score of transmitted path %.6g\n", true_score);

    const auto trace = [&](const kbest::StepTrace& st) {
        std::printf("%s step %d: %zu survivors\n", st.loop ? "loop" : "layer", st.step, st.survivors.size());
        for (std::size_t k = 0; k < st.survivors.size() && static_cast<int>(k) < show; ++k) {
            const auto& s = st.survivors[k];
            std::printf("  #%-2zu layer %d  score %12.6f  indices [%s]%s\n", k, st.layers[k], s.score, join(s.indices).c_str(),
                        s.indices == pkt.indices ? "  <- transmitted" : "");
        }
    };
    const auto res = kbest::kbest_decode(y, pccb, {cfg.K, cfg.iter, cfg.sorting}, layout, trace);
    std::printf("candidates (ascending score):\n");
    for (std::size_t k = 0; k < res.candidates.size(); ++k) {
        const auto& c = res.candidates[k];
        const bool ok = crc::crc_check(indices_to_frame(c.indices, layout));
        std::printf("  #%-2zu score %12.6f  crc %s  [%s]%s%s\n", k, c.score, ok ? "pass" : "fail", join(c.indices).c_str(),
                    static_cast<int>(k) == res.chosen ? "  <- chosen" : "", c.indices == pkt.indices ? "  (transmitted)" : "");
    }
    const bool correct = res.bits && *res.bits == msg;
    std::printf("result: %s; metric evaluations %llu (children %llu, ordering %llu)\n",
                !res.crc_pass ? "no candidate passed CRC" : (correct ? "decoded correctly" : "undetected error"),
                static_cast<unsigned long long>(res.stats.total_metric_evals()),
                static_cast<unsigned long long>(res.stats.child_metric_evals),
                static_cast<unsigned long long>(res.stats.ordering_metric_evals));
    return correct ? 0 : 2;
}

int cmd_validate(const std::string& cb_path, const std::string& w_path) {
    int failures = 0;
    std::optional<Codebook> cb;
    if (!cb_path.empty()) {
        try {
            cb = load_codebook(cb_path);
            std::printf("ok   codebook %s: V=%d M=%d D=%d, max energy deviation %.3e\n", cb_path.c_str(), cb->V(), cb->M(), cb->D(),
                        cb->max_energy_deviation());
        } catch (const std::exception& e) {
            std::printf("FAIL codebook %s: %s\n", cb_path.c_str(), e.what());
            ++failures;
        }
    }
    if (!w_path.empty()) {
        try {
            const nn::WeightsBundle b = nn::load_weights(w_path);
            std::printf("ok   weights %s: V=%d M=%d D=%d nt=%d nr=%d, encoder %s, receiver %s\n", w_path.c_str(), b.dims.V, b.dims.M,
                        b.dims.D, b.dims.nt, b.dims.nr, b.encoder ? "yes" : "no", b.receiver ? "yes" : "no");
            if (cb) {
                if (b.dims.V != cb->V() || b.dims.M != cb->M() || b.dims.D != cb->D()) {
                    std::printf("FAIL weights and codebook disagree on (V, M, D)\n");
                    ++failures;
                } else if (b.encoder) {
                    const Codebook e = enumerate_codebook(*b.encoder, cb->V(), cb->D(), cb->M());
                    double worst = 0.0;
                    for (int v = 0; v < cb->V(); ++v) worst = std::max(worst, (e.slice(v) - cb->slice(v)).cwiseAbs().maxCoeff());
                    const bool ok = worst <= 1e-5;
                    std::printf("%s encoder enumeration vs codebook: max abs difference %.3e\n", ok ? "ok  " : "FAIL", worst);
                    if (!ok) ++failures;
                }
            }
        } catch (const std::exception& e) {
            std::printf("FAIL weights %s: %s\n", w_path.c_str(), e.what());
            ++failures;
        }
    }
    if (cb_path.empty() && w_path.empty()) throw std::invalid_argument("validate-artifacts needs --codebook and/or --weights");
    std::printf("%s\n", failures ? "artifacts INVALID" : "artifacts valid");
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMO near-orthogonal superposition coding toolkit"};
    app.require_subcommand(1);

    Overrides sim_ov;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo PER/BER sweep, CSV output");
    add_config_options(simulate, sim_ov);
    simulate->add_option("--out", sim_out, "CSV path (default stdout)");

    Overrides miss_ov;
    std::string miss_out, miss_iters;
    auto* miss = app.add_subcommand("miss-rate", "Probability that the transmitted tuple is not among the K candidates");
    add_config_options(miss, miss_ov);
    miss->add_option("--iters", miss_iters, "Comma separated iter values (default 0,V/2,V)");
    miss->add_option("--out", miss_out, "CSV path (default stdout)");

    std::string an_cb, an_hist;
    int an_channels = 0, an_nt = 4, an_nr = 4;
    std::uint64_t an_seed = 1;
    auto* analyze = app.add_subcommand("analyze-codebook", "Inter/intra correlation of a codebook");
    analyze->add_option("--codebook", an_cb, "Codebook file")->required();
    analyze->add_option("--channels", an_channels, "Random channels for the post-channel report (0: skip)");
    analyze->add_option("--nt", an_nt, "Transmit antennas");
    analyze->add_option("--nr", an_nr, "Receive antennas");
    analyze->add_option("--seed", an_seed, "Channel seed");
    analyze->add_option("--hist-out", an_hist, "Write histograms to <prefix>_{pre,post}_{inter,intra}.csv");

    Overrides dec_ov;
    std::uint64_t dec_packet = 0;
    int dec_show = 4;
    auto* decode = app.add_subcommand("decode-one", "Trace the tree search on one simulated packet");
    add_config_options(decode, dec_ov);
    decode->add_option("--packet", dec_packet, "Packet index within the seed");
    decode->add_option("--show", dec_show, "Survivors printed per step");

    std::string val_cb, val_w;
    auto* validate = app.add_subcommand("validate-artifacts", "Check codebook and weights files against their invariants");
    validate->add_option("--codebook", val_cb, "Codebook file");
    validate->add_option("--weights", val_w, "Weights file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(sim_ov, sim_out);
        if (*miss) return cmd_miss_rate(miss_ov, miss_iters, miss_out);
        if (*analyze) return cmd_analyze(an_cb, an_channels, an_nt, an_nr, an_seed, an_hist);
        if (*decode) return cmd_decode_one(dec_ov, dec_packet, dec_show);
        if (*validate) return cmd_validate(val_cb, val_w);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
