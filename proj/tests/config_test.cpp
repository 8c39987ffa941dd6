#include <doctest.h>

#include <fstream>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "testutil.hpp"

using namespace forge;
using forge::test::TempDir;

TEST_SUITE("config") {

TEST_CASE("parses key = value lines with comments and quotes") {
    TempDir tmp("config_parse");
    std::ofstream out(tmp.path() / "run.cfg");
    out << "# experiment setup\n";
    out << "seed = 123\n";
    out << "train.epochs = 5   # quick run\n";
    out << "dataset.train = \"data/train\"\n";
    out << "transform.hue.enabled = false\n";
    out << "eval.ranks = 1, 5, 10\n";
    out << "\n";
    out.close();

    KeyValueConfig kv;
    kv.parse_file(tmp.path() / "run.cfg");
    const RunConfig cfg = RunConfig::resolve(kv);
    CHECK(cfg.seed == 123);
    CHECK(cfg.train.epochs == 5);
    CHECK(cfg.train_dir == "data/train");
    CHECK(cfg.space.hue.enabled == false);
    CHECK(cfg.protocol.ranks_reported == std::vector<int>{1, 5, 10});
}

TEST_CASE("defaults match the training recipe") {
    const RunConfig cfg = RunConfig::resolve(KeyValueConfig{});
    CHECK(cfg.train.momentum == 0.9);
    CHECK(cfg.train.weight_decay == 0.0005);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.epochs == 60);
    CHECK(cfg.train.lr == 0.001);
    CHECK(cfg.train.lr_drop_epoch == 40);
    CHECK(cfg.train.smoothing == 0.1);
    CHECK(cfg.descriptor.m == 6);
    CHECK(cfg.preprocess_width == 128);
    CHECK(cfg.preprocess_height == 384);
    CHECK(cfg.space.hue.min == -18.0);
    CHECK(cfg.space.hue.max == 18.0);
    CHECK(cfg.space.contrast.min == 0.6);
    CHECK(cfg.space.contrast.max == 1.4);
}

TEST_CASE("flag overlay wins over file values") {
    TempDir tmp("config_overlay");
    std::ofstream out(tmp.path() / "run.cfg");
    out << "seed = 1\nthreads = 2\n";
    out.close();

    KeyValueConfig kv;
    kv.parse_file(tmp.path() / "run.cfg");
    kv.set("seed", "999");  // CLI flag override
    const RunConfig cfg = RunConfig::resolve(kv);
    CHECK(cfg.seed == 999);
    CHECK(cfg.threads == 2);
}

TEST_CASE("unknown keys and malformed values fail loudly") {
    KeyValueConfig kv;
    kv.set("train.epocs", "60");
    CHECK_THROWS_AS((void)RunConfig::resolve(kv), FormatError);

    KeyValueConfig bad_value;
    bad_value.set("train.epochs", "sixty");
    CHECK_THROWS_AS((void)RunConfig::resolve(bad_value), FormatError);

    KeyValueConfig bad_bool;
    bad_bool.set("train.use_uit", "definitely");
    CHECK_THROWS_AS((void)RunConfig::resolve(bad_bool), FormatError);

    KeyValueConfig bad_line;
    CHECK_THROWS_AS(bad_line.parse_line("no equals sign", "test:1"), FormatError);
}

TEST_CASE("effective text echoes merged values and is stable") {
    KeyValueConfig kv;
    kv.set("seed", "7");
    kv.set("train.epochs", "3");
    const RunConfig cfg = RunConfig::resolve(kv);
    const std::string text = cfg.effective_text();
    CHECK(text.find("seed = 7\n") != std::string::npos);
    CHECK(text.find("train.epochs = 3\n") != std::string::npos);
    CHECK(text.find("train.momentum = 0.9") != std::string::npos);
    CHECK(text == RunConfig::resolve(kv).effective_text());

    // Echo parses back to the same config.
    KeyValueConfig echo;
    std::stringstream ss(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(ss, line)) {
        echo.parse_line(line, "echo:" + std::to_string(++line_no));
    }
    CHECK(RunConfig::resolve(echo).effective_text() == text);
}

}  // TEST_SUITE
