#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nos/codebook.hpp"
#include "nos/encoder.hpp"
#include "nos/types.hpp"

namespace nos::kbest {

enum class Sorting { sequential, per_layer, per_branch };

Sorting parse_sorting(const std::string& s);
std::string to_string(Sorting s);

struct DecodeConfig {
    int K = 16;
    int iter = 0;  // extra looped layers after the V forward layers
    Sorting sorting = Sorting::per_layer;

    void validate() const;
};

/// A live path of the tree search. `indices` is kept in transmit order with
/// -1 for layers not decoded yet; `order` lists layers in the order they were
/// (re)visited, which is what the loop walks through.
struct Survivor {
    std::vector<int> indices;
    std::vector<int> order;
    CVec u;              // sum of the chosen post-channel codewords
    double score = 0.0;  // ||y - u||^2 - ||y||^2
};

struct DecodeStats {
    int layers_processed = 0;
    std::uint64_t child_metric_evals = 0;     // children scored for expansion
    std::uint64_t ordering_metric_evals = 0;  // extra scores computed to pick layers

    std::uint64_t total_metric_evals() const noexcept { return child_metric_evals + ordering_metric_evals; }
};

struct RankedCandidate {
    std::vector<int> indices;  // transmit order
    double score = 0.0;
};

struct DecodeResult {
    std::optional<BitString> bits;   // info bits of the first candidate passing CRC
    std::optional<BitString> frame;  // same candidate with its CRC bits
    bool crc_pass = false;
    int chosen = -1;  // rank of the returned candidate
    std::vector<RankedCandidate> candidates;  // ascending score
    DecodeStats stats;
};

/// Snapshot after each processed layer; `layers[k]` is the layer survivor k
/// was extended on.
struct StepTrace {
    int step = 0;
    bool loop = false;
    std::vector<int> layers;
    std::vector<Survivor> survivors;
};
using TraceFn = std::function<void(const StepTrace&)>;

/// Per-received-vector precomputation: base[v][m] = ||C_H[v,:,m]||^2 - 2 Re(C_H'[v,:,m] y).
class ScoreContext {
public:
    ScoreContext(const PostChannelCodebook& pccb, const CVec& y);

    const PostChannelCodebook& codebook() const noexcept { return *pccb_; }
    const CVec& y() const noexcept { return y_; }
    double y_norm2() const noexcept { return y_norm2_; }

    /// Scores of all M children of `parent` on `layer`.
    RVec child_scores(const Survivor& parent, int layer) const;
    RVec child_scores(const CVec& u, double score, int layer) const;

    /// Removes the codeword chosen on `layer` from the survivor: returns the
    /// cancelled score and writes the reduced accumulated vector to u_out.
    double cancel(const Survivor& s, int layer, CVec& u_out) const;

private:
    const PostChannelCodebook* pccb_;
    CVec y_;
    double y_norm2_;
    std::vector<RVec> base_;
};

RVec child_scores(const Survivor& parent, int layer, const PostChannelCodebook& pccb, const CVec& y);

struct Candidate {
    double score = 0.0;
    int parent = 0;  // rank of the parent survivor
    int child = 0;   // codeword index
};

/// Keeps the K best candidates ordered by (score, parent, child). When
/// `tuple_of` is given, candidates whose index tuple equals that of a better
/// candidate are dropped before the cut.
std::vector<Candidate> select_top_k(std::vector<Candidate> cands, int K,
                                    const std::function<std::vector<int>(const Candidate&)>& tuple_of = {});

/// Next layer per survivor. sequential: lowest undecoded layer. per_layer:
/// the undecoded layer whose best child score, evaluated on the best
/// survivor, is smallest (same for every survivor). per_branch: the same rule
/// applied to each survivor separately. Survivors must be sorted by score.
std::vector<int> choose_next_layer(const std::vector<Survivor>& survivors, const ScoreContext& ctx, Sorting sorting,
                                   DecodeStats* stats = nullptr);

/// Tree search only: ranked candidates and counters, no CRC stage.
DecodeResult kbest_search(const CVec& y, const PostChannelCodebook& pccb, const DecodeConfig& cfg, const TraceFn& trace = {});

/// kbest_search followed by CRC checks in ascending score order.
DecodeResult kbest_decode(const CVec& y, const PostChannelCodebook& pccb, const DecodeConfig& cfg, const PacketLayout& layout,
                          const TraceFn& trace = {});

DecodeStats decode_stats(const DecodeResult& r);

}  // namespace nos::kbest
