#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "polylearn/error.hpp"
#include "polylearn/format.hpp"
#include "polylearn/io.hpp"

using namespace polylearn;

namespace {

std::string fixture(const std::string& name) { return std::string(POLYLEARN_FIXTURES) + "/" + name; }

std::ifstream open_fixture(const std::string& name) {
    std::ifstream in(fixture(name));
    EXPECT_TRUE(in.good()) << name;
    return in;
}

PolymatrixGame parse(const std::string& text) {
    std::istringstream in(text);
    return read_game(in);
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.0, std::sqrt(2.0)}) EXPECT_EQ(parse_double(format_double(v), "v"), v);
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(1.5), "1.5");
    EXPECT_THROW(parse_double("1.5x", "value"), ParseError);
    EXPECT_THROW(parse_double("", "value"), ParseError);
    EXPECT_EQ(parse_int(" 42 ", "n"), 42);
    EXPECT_THROW(parse_int("4.2", "n"), ParseError);
    EXPECT_EQ(parse_u64("0x10", "seed"), 16u);
}

TEST(GameIo, FixtureParsesAndHasTwoEquilibria) {
    auto in = open_fixture("two_player.game");
    const PolymatrixGame g = read_game(in);
    EXPECT_EQ(g.strategy_counts(), (std::vector<int>{2, 3}));
    EXPECT_EQ(g.individual(0), Eigen::Vector2d(0, 0.5));
    ASSERT_NE(g.edge_payoff(1, 0), nullptr);
    EXPECT_EQ((*g.edge_payoff(1, 0))(2, 1), -1.0);
    EXPECT_EQ(enumerate_psne(g).profiles(), (std::vector<Profile>{{0, 0}, {1, 1}}));
}

TEST(GameIo, RoundTripIsExact) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const PolymatrixGame g = oracle::random_dense_game(seed, {2, 4, 3});
        std::ostringstream out;
        write_header(out, ArtifactHeader{"generate --p 3", {{"p", "3"}}, seed});
        write_game(out, g);
        EXPECT_EQ(parse(out.str()), g);
    }
}

TEST(GameIo, HeaderLayout) {
    std::ostringstream out;
    write_header(out, ArtifactHeader{"psne --game g.txt", {{"epsilon", "0"}, {"seed", "7"}}, 7});
    EXPECT_EQ(out.str(), "# polylearn 0.1.0\n# command: psne --game g.txt\n# seed: 7\n# config epsilon = 0\n# config seed = 7\n");
}

TEST(GameIo, ErrorsNameTheLine) {
    EXPECT_NE(parse_error("players 2\nstrategies 2 2\nedge 1 3\n").find("line 3"), std::string::npos);
    EXPECT_NE(parse_error("players 2\nstrategies 2\n").find("line 2"), std::string::npos);
    EXPECT_NE(parse_error("players 2\nstrategies 2 2\nedge 1 2\n1 0\n").find("truncated"), std::string::npos);
    EXPECT_NE(parse_error("players 2\nstrategies 2 2\nedge 1 2\n1 0\n0 1\nedge 1 2\n1 0\n0 1\n").find("duplicate edge"),
              std::string::npos);
    EXPECT_NE(parse_error("players 2\nstrategies 2 2\nindividual 1 0 nan\n").find("line 3"), std::string::npos);
    EXPECT_NE(parse_error("players 2\nstrategies 2 2\nbogus\n").find("unknown keyword"), std::string::npos);
    EXPECT_NE(parse_error("").find("missing"), std::string::npos);
    EXPECT_THROW(read_game_file("/nonexistent/game.txt"), InvalidInput);
}

TEST(LearnedModelIo, RoundTripKeepsFitRecords) {
    const Dataset data = oracle::random_dataset(3, {2, 3, 2}, 300);
    LearnerConfig c;
    c.lambda = 0.02;
    const LearnedModel m = fit_game(data, c);
    std::ostringstream out;
    write_learned_model(out, m);
    std::istringstream in(out.str());
    const LearnedModelFile f = read_learned_model(in);
    EXPECT_EQ(f.game, m.game);
    EXPECT_EQ(f.lambda, 0.02);
    ASSERT_EQ(f.fits.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(f.fits[i].player, static_cast<int>(i));
        EXPECT_EQ(f.fits[i].objective, m.fits[i].objective);
        EXPECT_EQ(f.fits[i].iterations, m.fits[i].iterations);
        EXPECT_EQ(f.fits[i].converged, m.fits[i].converged);
        EXPECT_EQ(f.fits[i].group_norms, m.fits[i].theta.group_norms());
    }
    // a learned model is also a plain game file
    std::istringstream again(out.str());
    EXPECT_EQ(read_game(again), m.game);
}

TEST(DatasetIo, RoundTripAndOneIndexing) {
    const Dataset d = oracle::random_dataset(4, {2, 3, 4}, 50);
    std::ostringstream out;
    write_dataset(out, d);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "# strategies 2 3 4");
    EXPECT_NE(text.find("player_1,player_2,player_3\n"), std::string::npos);
    std::istringstream in(text);
    EXPECT_EQ(read_dataset(in), d);
}

TEST(DatasetIo, Errors) {
    std::istringstream bad_strategy("# strategies 2 2\nplayer_1,player_2\n1,3\n");
    EXPECT_THROW(read_dataset(bad_strategy), ParseError);
    std::istringstream zero("# strategies 2 2\nplayer_1,player_2\n0,1\n");
    EXPECT_THROW(read_dataset(zero), ParseError);
    std::istringstream ragged("# strategies 2 2\nplayer_1,player_2\n1,1,1\n");
    EXPECT_THROW(read_dataset(ragged), ParseError);
    std::istringstream no_counts("player_1,player_2\n1,1\n");
    EXPECT_THROW(read_dataset(no_counts), ParseError);
}

TEST(Votes, SenateRuleCaseInsensitive) {
    auto in = open_fixture("senate_votes.csv");
    const Dataset d = ingest_votes(in, senate_rule());
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d.strategy_counts(), std::vector<int>(4, 3));
    EXPECT_EQ(to_external(d.row(0)), (std::vector<int>{1, 3, 1, 2}));
    EXPECT_EQ(to_external(d.row(1)), (std::vector<int>{1, 3, 2, 1}));
    EXPECT_EQ(to_external(d.row(2)), (std::vector<int>{1, 3, 3, 1}));
}

TEST(Votes, SupremeCourtCodes) {
    auto in = open_fixture("supreme_court_votes.csv");
    const Dataset d = ingest_votes(in, supreme_court_rule());
    EXPECT_EQ(to_external(d.row(0)), (std::vector<int>{1, 3, 2}));
    EXPECT_EQ(to_external(d.row(1)), (std::vector<int>{1, 3, 2}));
    EXPECT_EQ(to_external(d.row(2)), (std::vector<int>{1, 1, 2}));
    EXPECT_EQ(builtin_rule("supreme-court").map("3"), 1);
    EXPECT_EQ(builtin_rule("un").map("9"), 0);
    EXPECT_THROW(builtin_rule("parliament"), InvalidInput);
}

TEST(Votes, EmptyCellsNeedFillOption) {
    {
        auto in = open_fixture("un_votes_gaps.csv");
        try {
            ingest_votes(in, un_rule());
            FAIL() << "expected a parse error";
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
        }
    }
    auto in = open_fixture("un_votes_gaps.csv");
    const Dataset d = ingest_votes(in, un_rule(), IngestOptions{true, true});
    EXPECT_EQ(to_external(d.row(0)), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(to_external(d.row(1)), (std::vector<int>{2, 3, 2}));
}

TEST(Votes, RaggedRowsAndUnknownCodes) {
    auto in = open_fixture("un_votes_ragged.csv");
    try {
        ingest_votes(in, un_rule());
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    std::istringstream unknown("a,b\n1,7\n");
    try {
        ingest_votes(unknown, un_rule());
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
    }
}

TEST(Votes, RuleFileWithoutHeader) {
    auto rule_in = open_fixture("custom_rule.txt");
    const VoteMappingRule rule = read_rule(rule_in, "custom");
    EXPECT_EQ(rule.codes.size(), 3u);
    auto in = open_fixture("custom_votes.csv");
    const Dataset d = ingest_votes(in, rule, IngestOptions{false, false});
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(to_external(d.row(0)), (std::vector<int>{1, 3, 2}));
    std::istringstream bad("Y = 4\n");
    EXPECT_THROW(read_rule(bad, "bad"), ParseError);
}
