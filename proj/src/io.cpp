#include "polylearn/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "polylearn/error.hpp"
#include "polylearn/format.hpp"

namespace polylearn {

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t k = 0;
    while (k < line.size()) {
        while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
        const std::size_t start = k;
        while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
        if (k > start) out.push_back(line.substr(start, k - start));
    }
    return out;
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                out.back() += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else if (ch != '\r') {
            out.back() += ch;
        }
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(trim(s));
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open input file '" + path + "'");
    return in;
}

int parse_player(std::string_view tok, int p, std::size_t line) {
    const long long v = parse_int(tok, "player index");
    if (v < 1 || v > p) parse_fail(line, "player index " + std::string(tok) + " outside 1.." + std::to_string(p));
    return static_cast<int>(v - 1);
}

}  // namespace

void write_header(std::ostream& out, const ArtifactHeader& h) {
    out << "# polylearn " << kVersion << '\n';
    out << "# command: " << one_line(h.command) << '\n';
    out << "# seed: " << h.seed << '\n';
    for (const auto& [key, value] : h.config) out << "# config " << one_line(key) << " = " << one_line(value) << '\n';
}

// --- games ---------------------------------------------------------------------------------

void write_game(std::ostream& out, const PolymatrixGame& game) {
    const int p = game.num_players();
    out << "players " << p << '\n';
    out << "strategies";
    for (int m : game.strategy_counts()) out << ' ' << m;
    out << '\n';
    for (int i = 0; i < p; ++i) {
        out << "individual " << i + 1;
        const Eigen::VectorXd& u = game.individual(i);
        for (Eigen::Index a = 0; a < u.size(); ++a) out << ' ' << format_double(u(a));
        out << '\n';
    }
    for (const auto& [i, j] : game.edges()) {
        out << "edge " << i + 1 << ' ' << j + 1 << '\n';
        const Eigen::MatrixXd& u = *game.edge_payoff(i, j);
        for (Eigen::Index a = 0; a < u.rows(); ++a) {
            for (Eigen::Index b = 0; b < u.cols(); ++b) out << (b ? " " : "") << format_double(u(a, b));
            out << '\n';
        }
    }
}

namespace {

struct GameParse {
    std::optional<GameBuilder> builder;
    double lambda = 0.0;
    bool has_lambda = false;
    std::vector<FitRecord> fits;
};

void parse_fit(const std::vector<std::string_view>& t, int p, std::size_t line, GameParse& st) {
    FitRecord rec;
    if (t.size() < 2) parse_fail(line, "fit record needs a player index");
    rec.player = parse_player(t[1], p, line);
    std::size_t k = 2;
    auto need = [&](std::size_t count) {
        if (k + count > t.size()) parse_fail(line, "truncated fit record");
    };
    while (k < t.size()) {
        const std::string_view key = t[k++];
        if (key == "group_norms") {
            need(static_cast<std::size_t>(p));
            for (int g = 0; g < p; ++g) rec.group_norms.push_back(parse_double(t[k++], "group norm"));
            continue;
        }
        need(1);
        const std::string_view v = t[k++];
        if (key == "objective") {
            rec.objective = parse_double(v, "objective");
        } else if (key == "iterations") {
            rec.iterations = static_cast<int>(parse_int(v, "iterations"));
        } else if (key == "gradient_norm") {
            rec.gradient_norm = parse_double(v, "gradient norm");
        } else if (key == "mapping_norm") {
            rec.mapping_norm = parse_double(v, "mapping norm");
        } else if (key == "converged") {
            rec.converged = parse_int(v, "converged flag") != 0;
        } else if (key == "timed_out") {
            rec.timed_out = parse_int(v, "timed_out flag") != 0;
        } else {
            parse_fail(line, "unknown fit field '" + std::string(key) + "'");
        }
    }
    st.fits.push_back(std::move(rec));
}

GameParse parse_game(std::istream& in) {
    GameParse st;
    std::string raw;
    std::size_t line = 0;
    int p = -1;
    std::vector<int> counts;
    auto require_header = [&](std::size_t ln) {
        if (!st.builder) parse_fail(ln, "expected 'players' and 'strategies' before payoff blocks");
    };
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view(raw);
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        const auto t = split_ws(view);
        if (t.empty()) continue;
        const std::string_view kw = t[0];
        if (kw == "players") {
            if (p >= 0) parse_fail(line, "duplicate 'players' line");
            if (t.size() != 2) parse_fail(line, "'players' takes one value");
            const long long v = parse_int(t[1], "player count");
            if (v < 1 || v > 1000000) parse_fail(line, "player count must be positive");
            p = static_cast<int>(v);
        } else if (kw == "strategies") {
            if (p < 0) parse_fail(line, "'strategies' before 'players'");
            if (st.builder) parse_fail(line, "duplicate 'strategies' line");
            if (t.size() != static_cast<std::size_t>(p) + 1) {
                parse_fail(line, "'strategies' needs " + std::to_string(p) + " values, got " + std::to_string(t.size() - 1));
            }
            for (std::size_t k = 1; k < t.size(); ++k) {
                const long long v = parse_int(t[k], "strategy count");
                if (v < 1 || v > 1000000) parse_fail(line, "strategy counts must be positive");
                counts.push_back(static_cast<int>(v));
            }
            st.builder.emplace(counts);
        } else if (kw == "individual") {
            require_header(line);
            if (t.size() < 2) parse_fail(line, "'individual' needs a player index");
            const int i = parse_player(t[1], p, line);
            const int mi = counts[static_cast<std::size_t>(i)];
            if (t.size() != static_cast<std::size_t>(mi) + 2) {
                parse_fail(line, "player " + std::to_string(i + 1) + " needs " + std::to_string(mi) + " individual payoffs");
            }
            Eigen::VectorXd u(mi);
            for (int a = 0; a < mi; ++a) u(a) = parse_double(t[static_cast<std::size_t>(a) + 2], "payoff");
            if (!u.allFinite()) parse_fail(line, "payoffs must be finite");
            st.builder->set_individual(i, u);
        } else if (kw == "edge") {
            require_header(line);
            if (t.size() != 3) parse_fail(line, "'edge' takes two player indices");
            const int i = parse_player(t[1], p, line);
            const int j = parse_player(t[2], p, line);
            if (i == j) parse_fail(line, "self edge on player " + std::to_string(i + 1));
            const std::size_t header_line = line;
            const int mi = counts[static_cast<std::size_t>(i)];
            const int mj = counts[static_cast<std::size_t>(j)];
            Eigen::MatrixXd u(mi, mj);
            int row = 0;
            while (row < mi) {
                if (!std::getline(in, raw)) parse_fail(line, "edge block truncated");
                ++line;
                std::string_view rv(raw);
                if (auto hash = rv.find('#'); hash != std::string_view::npos) rv = rv.substr(0, hash);
                const auto r = split_ws(rv);
                if (r.empty()) continue;
                if (r.size() != static_cast<std::size_t>(mj)) {
                    parse_fail(line, "edge row needs " + std::to_string(mj) + " values, got " + std::to_string(r.size()));
                }
                for (int b = 0; b < mj; ++b) u(row, b) = parse_double(r[static_cast<std::size_t>(b)], "payoff");
                ++row;
            }
            if (!u.allFinite()) parse_fail(line, "payoffs must be finite");
            if (st.builder->has_edge(i, j)) parse_fail(header_line, "duplicate edge " + std::string(t[1]) + " " + std::string(t[2]));
            st.builder->set_edge(i, j, std::move(u));
        } else if (kw == "lambda") {
            if (t.size() != 2) parse_fail(line, "'lambda' takes one value");
            st.lambda = parse_double(t[1], "lambda");
            st.has_lambda = true;
        } else if (kw == "fit") {
            require_header(line);
            parse_fit(t, p, line, st);
        } else {
            parse_fail(line, "unknown keyword '" + std::string(kw) + "'");
        }
    }
    if (!st.builder) parse_fail(line, "missing 'players' or 'strategies' line");
    return st;
}

}  // namespace

PolymatrixGame read_game(std::istream& in) { return parse_game(in).builder->build(); }

PolymatrixGame read_game_file(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_game(in);
}

void write_learned_model(std::ostream& out, const LearnedModel& model) {
    write_game(out, model.game);
    out << "lambda " << format_double(model.lambda) << '\n';
    for (const FitResult& f : model.fits) {
        out << "fit " << f.theta.owner() + 1 << " objective " << format_double(f.objective) << " iterations "
            << f.iterations << " gradient_norm " << format_double(f.gradient_norm) << " mapping_norm "
            << format_double(f.mapping_norm) << " converged " << int(f.converged) << " timed_out " << int(f.timed_out)
            << " group_norms";
        for (double g : f.theta.group_norms()) out << ' ' << format_double(g);
        out << '\n';
    }
}

LearnedModelFile read_learned_model(std::istream& in) {
    GameParse st = parse_game(in);
    LearnedModelFile out;
    out.game = st.builder->build();
    out.lambda = st.lambda;
    out.fits = std::move(st.fits);
    return out;
}

// --- datasets -----------------------------------------------------------------------------------

namespace {

void write_table_header(std::ostream& out, const std::vector<int>& counts) {
    out << "# strategies";
    for (int m : counts) out << ' ' << m;
    out << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i) out << (i ? "," : "") << "player_" << i + 1;
    out << '\n';
}

void write_row(std::ostream& out, ProfileView x) {
    for (std::size_t i = 0; i < x.size(); ++i) out << (i ? "," : "") << x[i] + 1;
    out << '\n';
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
    write_table_header(out, data.strategy_counts());
    for (std::size_t l = 0; l < data.size(); ++l) write_row(out, data.row(l));
}

void write_profiles(std::ostream& out, const std::vector<int>& counts, const std::vector<Profile>& profiles) {
    write_table_header(out, counts);
    for (const Profile& x : profiles) write_row(out, x);
}

Dataset read_dataset(std::istream& in) {
    std::string raw;
    std::size_t line = 0;
    std::optional<std::vector<int>> counts;
    bool header_seen = false;
    Dataset data;
    Profile x;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view = trim(raw);
        if (view.empty()) continue;
        if (view.front() == '#') {
            const auto t = split_ws(view.substr(1));
            if (!t.empty() && t[0] == "strategies") {
                if (counts) parse_fail(line, "duplicate strategies comment");
                std::vector<int> c;
                for (std::size_t k = 1; k < t.size(); ++k) {
                    const long long v = parse_int(t[k], "strategy count");
                    if (v < 1) parse_fail(line, "strategy counts must be positive");
                    c.push_back(static_cast<int>(v));
                }
                if (c.empty()) parse_fail(line, "strategies comment lists no players");
                counts = std::move(c);
            }
            continue;
        }
        const auto cells = split_csv(view);
        if (!header_seen) {
            if (!counts) parse_fail(line, "missing '# strategies' line before the header");
            if (cells.size() != counts->size()) {
                parse_fail(line, "header has " + std::to_string(cells.size()) + " columns, expected " +
                                     std::to_string(counts->size()));
            }
            header_seen = true;
            data = Dataset(*counts);
            x.resize(counts->size());
            continue;
        }
        if (cells.size() != counts->size()) {
            parse_fail(line, "row has " + std::to_string(cells.size()) + " columns, expected " + std::to_string(counts->size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const long long v = parse_int(cells[i], "strategy");
            if (v < 1 || v > (*counts)[i]) {
                parse_fail(line, "column " + std::to_string(i + 1) + ": strategy " + cells[i] + " outside 1.." +
                                     std::to_string((*counts)[i]));
            }
            x[i] = static_cast<Strategy>(v - 1);
        }
        data.push_back(x);
    }
    if (!header_seen) parse_fail(line, "missing dataset header");
    return data;
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_dataset(in);
}

// --- votes ---------------------------------------------------------------------------------

int VoteMappingRule::map(const std::string& code) const {
    auto it = codes.find(lower(code));
    return it == codes.end() ? 0 : it->second;
}

namespace {

VoteMappingRule make_rule(std::string name, std::initializer_list<std::pair<const char*, int>> entries) {
    VoteMappingRule rule{std::move(name), {}};
    for (const auto& [code, s] : entries) rule.codes.emplace(lower(code), s);
    return rule;
}

}  // namespace

VoteMappingRule supreme_court_rule() {
    return make_rule("supreme-court", {{"1", 1}, {"3", 1}, {"4", 1}, {"5", 1}, {"6", 2}, {"7", 2}, {"8", 2}, {"2", 3}});
}

VoteMappingRule senate_rule() {
    return make_rule("senate", {{"yea", 1},
                                {"aye", 1},
                                {"yes", 1},
                                {"not voting", 2},
                                {"present", 2},
                                {"nay", 3},
                                {"no", 3}});
}

VoteMappingRule un_rule() { return make_rule("un", {{"1", 1}, {"2", 2}, {"3", 3}}); }

VoteMappingRule builtin_rule(const std::string& name) {
    if (name == "supreme-court") return supreme_court_rule();
    if (name == "senate") return senate_rule();
    if (name == "un") return un_rule();
    throw InvalidInput("unknown vote mapping rule '" + name + "' (expected supreme-court, senate, un, or a rule file)");
}

VoteMappingRule read_rule(std::istream& in, std::string name) {
    VoteMappingRule rule{std::move(name), {}};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view(raw);
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.rfind('=');
        if (eq == std::string_view::npos) parse_fail(line, "expected 'code = strategy'");
        const std::string code = lower(view.substr(0, eq));
        const long long s = parse_int(view.substr(eq + 1), "strategy");
        if (s < 1 || s > 3) parse_fail(line, "vote strategies must lie in 1..3");
        if (code.empty()) parse_fail(line, "empty vote code");
        if (!rule.codes.emplace(code, static_cast<int>(s)).second) parse_fail(line, "duplicate code '" + code + "'");
    }
    if (rule.codes.empty()) throw ParseError("rule file maps no codes");
    return rule;
}

Dataset ingest_votes(std::istream& in, const VoteMappingRule& rule, const IngestOptions& options) {
    std::string raw;
    std::size_t row = 0;
    std::size_t width = 0;
    std::vector<std::vector<int>> rows;
    while (std::getline(in, raw)) {
        ++row;
        if (trim(raw).empty()) continue;
        const auto cells = split_csv(raw);
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw ParseError("row " + std::to_string(row) + ": has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(width));
        }
        if (options.header && row == 1) continue;
        std::vector<int> mapped;
        for (std::size_t col = 0; col < cells.size(); ++col) {
            int s = 0;
            if (trim(cells[col]).empty()) {
                if (!options.fill_abstain) {
                    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                                     ": empty vote (use --fill-abstain to map it to 2)");
                }
                s = 2;
            } else {
                s = rule.map(cells[col]);
                if (s == 0) {
                    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                                     ": code '" + std::string(trim(cells[col])) + "' is not mapped by rule " + rule.name);
                }
            }
            mapped.push_back(s - 1);
        }
        rows.push_back(std::move(mapped));
    }
    if (width == 0) throw ParseError("vote file is empty");
    if (rows.empty()) throw ParseError("vote file has no vote rows");
    Dataset data(std::vector<int>(width, 3));
    data.reserve(rows.size());
    for (const auto& r : rows) data.push_back(r);
    return data;
}

}  // namespace polylearn
