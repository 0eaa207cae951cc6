#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("rrnn_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    Outcome run(const std::string& args, const std::string& env = "RRNN_LOG=info") const {
        const fs::path out = dir_ / "stdout.txt";
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = env + " '" + RRNN_CLI_PATH + "' " + args + " >'" +
                                out.string() + "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        Outcome r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    // Small pose dataset shared by the train/eval tests.
    std::string pose_data(const std::string& extra = "") const {
        const std::string file = path("pose.txt");
        const Outcome r =
            run("synth pose --subjects 6 --dim 5 --seed 2 " + extra + " -o " + file);
        EXPECT_EQ(r.code, 0) << r.err;
        return file;
    }

    std::string video_data() const {
        const std::string file = path("video.txt");
        const Outcome r =
            run("synth video --subjects 3 --clips 2 --frames 10 --dim 5 --seed 2 -o " + file);
        EXPECT_EQ(r.code, 0) << r.err;
        return file;
    }

    fs::path dir_;
};

struct EpochLine {
    std::string f1, f2, f3, total;
};

std::vector<EpochLine> epoch_lines(const std::string& out) {
    static const std::regex re(R"(^epoch (\d+) f1=(\S+) f2=(\S+) f3=(\S+) total=(\S+)$)");
    std::vector<EpochLine> lines;
    for (const auto& line : lines_of(out)) {
        std::smatch m;
        if (std::regex_match(line, m, re)) {
            EXPECT_EQ(std::stoul(m[1]), lines.size() + 1);
            lines.push_back({m[2], m[3], m[4], m[5]});
        }
    }
    return lines;
}

}  // namespace

TEST_F(Cli, SynthIsByteIdenticalPerSeed) {
    ASSERT_EQ(run("synth pose --subjects 20 --dim 16 --seed 7 -o " + path("a.txt")).code, 0);
    ASSERT_EQ(run("synth pose --subjects 20 --dim 16 --seed 7 -o " + path("b.txt")).code, 0);
    const std::string a = slurp(path("a.txt"));
    EXPECT_EQ(a, slurp(path("b.txt")));
    EXPECT_EQ(a.rfind("rrnn-features v1 d=16\n", 0), 0u);
    ASSERT_EQ(run("synth pose --subjects 20 --dim 16 --seed 8 -o " + path("c.txt")).code, 0);
    EXPECT_NE(a, slurp(path("c.txt")));
}

TEST_F(Cli, SynthVideoTrackCount) {
    const Outcome r = run("synth video --subjects 10 --clips 3 --frames 25 --seed 1 -o " +
                          path("v.txt"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(slurp(path("v.txt")));
    ASSERT_FALSE(lines.empty());
    EXPECT_EQ(lines[0].rfind("rrnn-features v1 d=16", 0), 0u);
    std::set<std::string> tracks;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        tracks.insert(lines[i].substr(0, lines[i].find(' ')));
    }
    EXPECT_EQ(tracks.size(), 30u);
    EXPECT_EQ(lines.size(), 1u + 750u);
}

TEST_F(Cli, TrainPoseLogsNoClassLoss) {
    const std::string data = pose_data();
    const Outcome r = run("train pose -d " + data + " -o " + path("m.txt") +
                          " --epochs 3 --hidden 6 --history " + path("h.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto epochs = epoch_lines(r.out);
    ASSERT_EQ(epochs.size(), 3u);
    for (const auto& e : epochs) {
        EXPECT_EQ(e.f3, "0");
        EXPECT_NE(e.f2, "0");
    }
    const auto csv = lines_of(slurp(path("h.csv")));
    ASSERT_EQ(csv.size(), 4u);
    EXPECT_EQ(csv[0], "epoch,f1,f2,f3,total");
    EXPECT_EQ(csv[1].rfind("1,", 0), 0u);
    EXPECT_EQ(slurp(path("m.txt")).rfind("rrnn-model v1\n", 0), 0u);
}

TEST_F(Cli, TrainVideoLogsNoSequenceLoss) {
    const std::string data = video_data();
    const Outcome r = run("train video -d " + data + " -o " + path("m.txt") +
                          " --epochs 3 --hidden 6 --clip-len 5");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto epochs = epoch_lines(r.out);
    ASSERT_EQ(epochs.size(), 3u);
    for (const auto& e : epochs) {
        EXPECT_EQ(e.f2, "0");
        EXPECT_NE(e.f3, "0");
    }
}

TEST_F(Cli, UnweightedObjectiveIsReconstructionOnly) {
    const std::string data = pose_data();
    const Outcome r = run("train pose -d " + data + " -o " + path("m.txt") +
                          " --epochs 4 --hidden 6 --alpha 0 --beta 0");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto epochs = epoch_lines(r.out);
    ASSERT_EQ(epochs.size(), 4u);
    for (const auto& e : epochs) {
        EXPECT_EQ(e.total, e.f1);
    }
}

TEST_F(Cli, TrainingIsReproducible) {
    const std::string data = pose_data();
    const std::string args = "train pose -d " + data + " --epochs 3 --hidden 6 --seed 4 ";
    ASSERT_EQ(run(args + "-o " + path("a.txt") + " --history " + path("ha.csv")).code, 0);
    ASSERT_EQ(run(args + "-o " + path("b.txt") + " --history " + path("hb.csv")).code, 0);
    EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
    EXPECT_EQ(slurp(path("ha.csv")), slurp(path("hb.csv")));
}

TEST_F(Cli, QuietSilencesEpochLines) {
    const std::string data = pose_data();
    const Outcome r = run("train pose -d " + data + " -o " + path("m.txt") + " --epochs 2",
                          "RRNN_LOG=quiet");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(epoch_lines(r.out).empty());
    EXPECT_TRUE(r.err.empty()) << r.err;
}

TEST_F(Cli, CrossPoseTableShape) {
    const std::string data = pose_data();
    ASSERT_EQ(run("train pose -d " + data + " -o " + path("m.txt") + " --epochs 2").code, 0);
    const Outcome r = run("eval pose -m " + path("m.txt") + " -d " + data + " --cross-pose");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(r.out);
    ASSERT_GE(lines.size(), 8u);
    EXPECT_NE(lines[0].find("Average"), std::string::npos);
    std::istringstream header(lines[0]);
    std::vector<std::string> columns;
    for (std::string tok; header >> tok;) {
        columns.push_back(tok);
    }
    EXPECT_EQ(columns.size(), 1u + 7u + 1u);
    for (std::size_t i = 1; i <= 7; ++i) {
        std::istringstream row(lines[i]);
        std::vector<std::string> cells;
        for (std::string tok; row >> tok;) {
            cells.push_back(tok);
        }
        ASSERT_EQ(cells.size(), 9u) << lines[i];
        EXPECT_EQ(cells[i], "-") << lines[i];
    }
}

TEST_F(Cli, NoiselessOwnSubjectsScorePerfectly) {
    const std::string data = pose_data("--noise 0 --pose-rotation 0 --pose-shift 0");
    ASSERT_EQ(run("train pose -d " + data + " -o " + path("m.txt") + " --epochs 5").code, 0);
    const Outcome r = run("eval pose -m " + path("m.txt") + " -d " + data +
                          " --subjects train --records -");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("average,1.000000"), std::string::npos) << r.out;
}

TEST_F(Cli, VideoSingleTrialHasZeroSpread) {
    const std::string data = video_data();
    ASSERT_EQ(run("train video -d " + data + " -o " + path("m.txt") +
                  " --epochs 2 --clip-len 5")
                  .code,
              0);
    const Outcome r = run("eval video -m " + path("m.txt") + " -d " + data + " --trials 1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("+/- 0.0"), std::string::npos) << r.out;
}

TEST_F(Cli, EvalRejectsDimensionMismatch) {
    const std::string data = pose_data();
    ASSERT_EQ(run("train pose -d " + data + " -o " + path("m.txt") + " --epochs 1").code, 0);
    ASSERT_EQ(run("synth pose --subjects 6 --dim 7 -o " + path("wide.txt")).code, 0);
    const Outcome r = run("eval pose -m " + path("m.txt") + " -d " + path("wide.txt"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("d=5"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("d=7"), std::string::npos) << r.err;
}

TEST_F(Cli, GradcheckExitCodes) {
    const Outcome ok = run("gradcheck");
    EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
    EXPECT_NE(ok.out.find("worst: alpha="), std::string::npos) << ok.out;
    EXPECT_NE(ok.out.find("param="), std::string::npos) << ok.out;
    for (const char* dims : {"--dim 6 --hidden 8 --classes 4 --steps 6",
                             "--dim 2 --hidden 2 --classes 2 --steps 1"}) {
        EXPECT_EQ(run(std::string("gradcheck ") + dims).code, 0) << dims;
    }
    const Outcome bad = run("gradcheck --corrupt dW");
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.out.find("param=W"), std::string::npos) << bad.out;
}

TEST_F(Cli, AblateVideoBetaGrid) {
    const std::string data = video_data();
    const Outcome r = run("ablate video -d " + data +
                          " --beta-grid 0,1 --epochs 2 --clip-len 5 --trials 2 --records -");
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t rows = 0;
    for (const auto& line : lines_of(r.out)) {
        if (line.rfind("alpha=0 beta=", 0) == 0) {
            ++rows;
        }
    }
    EXPECT_EQ(rows, 2u) << r.out;
}

TEST_F(Cli, AblatePoseIncludesRawBaseline) {
    const std::string data = pose_data();
    const Outcome r = run("ablate pose -d " + data + " --alpha-grid 0,0.1 --epochs 2 --records -");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("raw,"), std::string::npos);
    EXPECT_NE(r.out.find("alpha=0 beta=0,"), std::string::npos);
    EXPECT_NE(r.out.find("alpha=0.1 beta=0,"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("train").code, 1);
    EXPECT_EQ(run("gradcheck --bogus").code, 1);
    EXPECT_EQ(run("train pose -d x -o y --optimizer rmsprop").code, 1);
    EXPECT_EQ(run("--version").code, 0);

    const Outcome missing = run("train pose -d " + path("nope.txt") + " -o " + path("m.txt"));
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("nope.txt"), std::string::npos) << missing.err;

    {
        std::ofstream bad(path("bad.txt"));
        bad << "rrnn-features v1 d=2\na s 0 1 2\na s 1 1 oops\n";
    }
    const Outcome malformed = run("train pose -d " + path("bad.txt") + " -o " + path("m.txt"));
    EXPECT_EQ(malformed.code, 2);
    EXPECT_NE(malformed.err.find("line 3"), std::string::npos) << malformed.err;
    EXPECT_FALSE(fs::exists(path("m.txt")));
}
