#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "polylearn/experiments.hpp"
#include "polylearn/game.hpp"
#include "polylearn/learner.hpp"
#include "polylearn/observation.hpp"

namespace polylearn {

inline constexpr const char* kVersion = "0.1.0";

/// Comment header written at the top of every artifact: tool version, the
/// command, its resolved configuration, and the seed.
struct ArtifactHeader {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;
    std::uint64_t seed = 0;
};

void write_header(std::ostream& out, const ArtifactHeader& header);

// --- game files ----------------------------------------------------------------------
//
//   players p
//   strategies m_1 ... m_p
//   individual i v_1 ... v_{m_i}
//   edge i j            (j influences i; followed by m_i rows of m_j reals)
//
// Players are 1-indexed, `#` starts a comment, blank lines are ignored.

void write_game(std::ostream& out, const PolymatrixGame& game);
PolymatrixGame read_game(std::istream& in);
PolymatrixGame read_game_file(const std::string& path);

/// Game file plus per-player fit records:
///   lambda v
///   fit i objective v iterations k gradient_norm g mapping_norm r converged 0|1 timed_out 0|1 group_norms n_1 ... n_p
/// read_game skips these lines.
void write_learned_model(std::ostream& out, const LearnedModel& model);

struct FitRecord {
    int player = 0;
    double objective = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
    double mapping_norm = 0.0;
    bool converged = false;
    bool timed_out = false;
    std::vector<double> group_norms;
};

struct LearnedModelFile {
    PolymatrixGame game;
    double lambda = 0.0;
    std::vector<FitRecord> fits;
};

LearnedModelFile read_learned_model(std::istream& in);

// --- datasets -----------------------------------------------------------------------------
//
//   # strategies m_1 ... m_p
//   player_1,...,player_p
//   x_1,...,x_p            (1-indexed)

void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);

/// Profiles as a dataset-shaped CSV (used for equilibrium sets).
void write_profiles(std::ostream& out, const std::vector<int>& strategy_counts, const std::vector<Profile>& profiles);

// --- vote ingestion ------------------------------------------------------------------------

/// Maps raw vote cells to strategies 1..3 (yes, abstain, no).
struct VoteMappingRule {
    std::string name;
    std::map<std::string, int> codes;

    /// Strategy in {1,2,3} or 0 when the code is unmapped.
    int map(const std::string& code) const;
};

VoteMappingRule supreme_court_rule();
VoteMappingRule senate_rule();
VoteMappingRule un_rule();
/// Built-in rule by name (supreme-court, senate, un).
VoteMappingRule builtin_rule(const std::string& name);
/// Rule file: `code = strategy` per line, `#` comments.
VoteMappingRule read_rule(std::istream& in, std::string name);

struct IngestOptions {
    /// First row is a header of player names.
    bool header = true;
    /// Empty cells become strategy 2 instead of an error.
    bool fill_abstain = false;
};

/// Rectangular CSV, one row per vote, one column per voter. Every player has
/// 3 strategies. Errors name the offending row and column (1-indexed).
Dataset ingest_votes(std::istream& in, const VoteMappingRule& rule, const IngestOptions& options = {});

}  // namespace polylearn
