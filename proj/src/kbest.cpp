#include "nos/kbest.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "nos/crc.hpp"

namespace nos::kbest {

namespace {

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.parent != b.parent) return a.parent < b.parent;
    return a.child < b.child;
}

struct TupleHash {
    std::size_t operator()(const std::vector<int>& t) const noexcept {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (int x : t) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)));
        return static_cast<std::size_t>(h);
    }
};

std::vector<int> remaining_layers(const Survivor& s) {
    std::vector<int> r;
    for (std::size_t v = 0; v < s.indices.size(); ++v)
        if (s.indices[v] < 0) r.push_back(static_cast<int>(v));
    return r;
}

// Picks the layer with the smallest best-child score; ties go to the lower
// layer id. Optionally returns that layer's child scores.
int best_layer_for(const Survivor& s, const ScoreContext& ctx, DecodeStats* stats, RVec* scores_out) {
    const auto rem = remaining_layers(s);
    if (rem.empty()) throw std::logic_error("choose_next_layer: no remaining layers");
    if (rem.size() == 1) {
        if (scores_out) *scores_out = ctx.child_scores(s, rem.front());
        return rem.front();
    }
    int best = rem.front();
    double best_min = std::numeric_limits<double>::infinity();
    RVec best_scores;
    for (int l : rem) {
        RVec sc = ctx.child_scores(s, l);
        if (stats) stats->ordering_metric_evals += static_cast<std::uint64_t>(sc.size());
        const double mn = sc.minCoeff();
        if (mn < best_min) {
            best_min = mn;
            best = l;
            best_scores = std::move(sc);
        }
    }
    if (scores_out) *scores_out = std::move(best_scores);
    return best;
}

Survivor extend(const Survivor& parent, const CVec& u_base, int layer, int child, double score, const PostChannelCodebook& pccb) {
    Survivor s;
    s.indices = parent.indices;
    s.indices[static_cast<std::size_t>(layer)] = child;
    s.order = parent.order;
    s.order.push_back(layer);
    s.u = u_base + pccb.slice(layer).col(child);
    s.score = score;
    return s;
}

}  // namespace

Sorting parse_sorting(const std::string& s) {
    if (s == "sequential") return Sorting::sequential;
    if (s == "per_layer" || s == "per-layer") return Sorting::per_layer;
    if (s == "per_branch" || s == "per-branch") return Sorting::per_branch;
    throw std::invalid_argument("unknown sorting mode '" + s + "' (sequential | per_layer | per_branch)");
}

std::string to_string(Sorting s) {
    switch (s) {
        case Sorting::sequential: return "sequential";
        case Sorting::per_layer: return "per_layer";
        case Sorting::per_branch: return "per_branch";
    }
    return "?";
}

void DecodeConfig::validate() const {
    if (K < 1) throw std::invalid_argument("DecodeConfig: K must be >= 1");
    if (iter < 0) throw std::invalid_argument("DecodeConfig: iter must be >= 0");
}

ScoreContext::ScoreContext(const PostChannelCodebook& pccb, const CVec& y) : pccb_(&pccb), y_(y), y_norm2_(y.squaredNorm()) {
    if (y.size() != pccb.length()) throw std::invalid_argument("ScoreContext: y length != nr * mc");
    base_.reserve(static_cast<std::size_t>(pccb.V()));
    for (int v = 0; v < pccb.V(); ++v) {
        const RVec cy = (pccb.slice(v).adjoint() * y).real();
        base_.push_back(pccb.norms().row(v).transpose() - 2.0 * cy);
    }
}

RVec ScoreContext::child_scores(const CVec& u, double score, int layer) const {
    const auto& b = base_.at(static_cast<std::size_t>(layer));
    RVec out = b.array() + score;
    if (u.size() != 0 && !u.isZero(0.0)) out.noalias() += 2.0 * (pccb_->slice(layer).adjoint() * u).real();
    return out;
}

RVec ScoreContext::child_scores(const Survivor& parent, int layer) const {
    if (layer < 0 || layer >= pccb_->V()) throw std::out_of_range("child_scores: layer out of range");
    return child_scores(parent.u, parent.score, layer);
}

double ScoreContext::cancel(const Survivor& s, int layer, CVec& u_out) const {
    const int m = s.indices.at(static_cast<std::size_t>(layer));
    if (m < 0) throw std::logic_error("cancel: layer has not been decoded");
    const auto c = pccb_->slice(layer).col(m);
    u_out = s.u - c;
    // t = s - ||c||^2 - 2 Re(c' u_rest - c' y)
    const double cross = c.dot(u_out).real() - c.dot(y_).real();
    return s.score - pccb_->norm2(layer, m) - 2.0 * cross;
}

RVec child_scores(const Survivor& parent, int layer, const PostChannelCodebook& pccb, const CVec& y) {
    return ScoreContext(pccb, y).child_scores(parent, layer);
}

std::vector<Candidate> select_top_k(std::vector<Candidate> cands, int K,
                                    const std::function<std::vector<int>(const Candidate&)>& tuple_of) {
    if (K < 1) throw std::invalid_argument("select_top_k: K must be >= 1");
    const auto k = static_cast<std::size_t>(K);
    if (!tuple_of) {
        const std::size_t n = std::min(k, cands.size());
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(), candidate_less);
        cands.resize(n);
        return cands;
    }
    // Sort a prefix, walk it, and sort the rest only when duplicates
    // exhausted the prefix.
    std::size_t sorted = std::min(cands.size(), 2 * k);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(sorted), cands.end(), candidate_less);
    std::vector<Candidate> kept;
    std::unordered_set<std::vector<int>, TupleHash> seen;
    for (std::size_t i = 0; i < cands.size() && kept.size() < k; ++i) {
        if (i == sorted) {
            std::sort(cands.begin() + static_cast<std::ptrdiff_t>(sorted), cands.end(), candidate_less);
            sorted = cands.size();
        }
        if (seen.insert(tuple_of(cands[i])).second) kept.push_back(cands[i]);
    }
    return kept;
}

std::vector<int> choose_next_layer(const std::vector<Survivor>& survivors, const ScoreContext& ctx, Sorting sorting,
                                   DecodeStats* stats) {
    if (survivors.empty()) throw std::invalid_argument("choose_next_layer: no survivors");
    std::vector<int> out(survivors.size());
    switch (sorting) {
        case Sorting::sequential:
            for (std::size_t k = 0; k < survivors.size(); ++k) {
                const auto rem = remaining_layers(survivors[k]);
                if (rem.empty()) throw std::logic_error("choose_next_layer: no remaining layers");
                out[k] = rem.front();
            }
            break;
        case Sorting::per_layer:
            std::fill(out.begin(), out.end(), best_layer_for(survivors.front(), ctx, stats, nullptr));
            break;
        case Sorting::per_branch:
            for (std::size_t k = 0; k < survivors.size(); ++k) out[k] = best_layer_for(survivors[k], ctx, stats, nullptr);
            break;
    }
    return out;
}

DecodeResult kbest_search(const CVec& y, const PostChannelCodebook& pccb, const DecodeConfig& cfg, const TraceFn& trace) {
    cfg.validate();
    const int V = pccb.V();
    const int M = pccb.M();
    const ScoreContext ctx(pccb, y);

    DecodeResult result;
    auto& stats = result.stats;

    Survivor root;
    root.indices.assign(static_cast<std::size_t>(V), -1);
    root.u = CVec::Zero(pccb.length());
    std::vector<Survivor> survivors{root};

    const auto tuple_fn = [&](const std::vector<Survivor>& parents, const std::vector<int>& layer_of) {
        return [&parents, &layer_of](const Candidate& c) {
            auto t = parents[static_cast<std::size_t>(c.parent)].indices;
            t[static_cast<std::size_t>(layer_of[static_cast<std::size_t>(c.parent)])] = c.child;
            return t;
        };
    };

    for (int step = 0; step < V + cfg.iter; ++step) {
        const bool loop = step >= V;
        const std::size_t n_par = survivors.size();
        std::vector<int> layer_of(n_par);
        std::vector<RVec> scores(n_par);
        std::vector<CVec> u_base(n_par);

        if (!loop) {
            if (cfg.sorting == Sorting::per_branch) {
                for (std::size_t k = 0; k < n_par; ++k) layer_of[k] = best_layer_for(survivors[k], ctx, &stats, &scores[k]);
                // best_layer_for counted every layer it scored; the chosen one is an expansion.
                for (std::size_t k = 0; k < n_par; ++k)
                    if (remaining_layers(survivors[k]).size() > 1) stats.ordering_metric_evals -= static_cast<std::uint64_t>(M);
            } else {
                layer_of = choose_next_layer(survivors, ctx, cfg.sorting, &stats);
                for (std::size_t k = 0; k < n_par; ++k) scores[k] = ctx.child_scores(survivors[k], layer_of[k]);
            }
            for (std::size_t k = 0; k < n_par; ++k) u_base[k] = survivors[k].u;
        } else {
            const auto j = static_cast<std::size_t>(step - V);
            for (std::size_t k = 0; k < n_par; ++k) {
                const Survivor& s = survivors[k];
                layer_of[k] = s.order[j];
                const double t = ctx.cancel(s, layer_of[k], u_base[k]);
                scores[k] = ctx.child_scores(u_base[k], t, layer_of[k]);
            }
        }
        stats.child_metric_evals += static_cast<std::uint64_t>(n_par) * static_cast<std::uint64_t>(M);

        std::vector<Candidate> cands;
        cands.reserve(n_par * static_cast<std::size_t>(M));
        for (std::size_t k = 0; k < n_par; ++k)
            for (int m = 0; m < M; ++m) cands.push_back({scores[k](m), static_cast<int>(k), m});

        // Distinct paths are required in the loop; in the forward pass they can
        // only collide when survivors follow different layer orders.
        const bool distinct = loop || cfg.sorting == Sorting::per_branch;
        const auto kept = distinct ? select_top_k(std::move(cands), cfg.K, tuple_fn(survivors, layer_of))
                                   : select_top_k(std::move(cands), cfg.K);

        std::vector<Survivor> next;
        next.reserve(kept.size());
        for (const auto& c : kept) {
            const auto p = static_cast<std::size_t>(c.parent);
            next.push_back(extend(survivors[p], u_base[p], layer_of[p], c.child, c.score, pccb));
        }
        ++stats.layers_processed;

        if (trace) {
            StepTrace st;
            st.step = step;
            st.loop = loop;
            for (const auto& c : kept) st.layers.push_back(layer_of[static_cast<std::size_t>(c.parent)]);
            st.survivors = next;
            trace(st);
        }
        survivors = std::move(next);
    }

    result.candidates.reserve(survivors.size());
    for (const auto& s : survivors) result.candidates.push_back({s.indices, s.score});
    return result;
}

DecodeResult kbest_decode(const CVec& y, const PostChannelCodebook& pccb, const DecodeConfig& cfg, const PacketLayout& layout,
                          const TraceFn& trace) {
    layout.validate();
    if (pccb.V() != layout.V || pccb.M() != layout.M()) throw std::invalid_argument("kbest_decode: codebook does not match layout");
    DecodeResult result = kbest_search(y, pccb, cfg, trace);
    for (std::size_t k = 0; k < result.candidates.size(); ++k) {
        BitString frame = indices_to_frame(result.candidates[k].indices, layout);
        if (crc::crc_check(frame)) {
            result.crc_pass = true;
            result.chosen = static_cast<int>(k);
            result.bits = frame.slice(0, static_cast<std::size_t>(layout.info_bits));
            result.frame = std::move(frame);
            break;
        }
    }
    return result;
}

DecodeStats decode_stats(const DecodeResult& r) { return r.stats; }

}  // namespace nos::kbest
