#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "powerlines/run_store.hpp"

using namespace powerlines;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("powerlines_test_" + name);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

const char* kHeader =
    "run_id,n_params,d_tokens,batch_sequences,seq_len,eta_base,eta_peak,weight_decay,"
    "val_loss";

}  // namespace

TEST_CASE("load_runs parses a CSV row and derives TPP") {
    const fs::path p = temp_file("basic.csv");
    write_text(p, std::string(kHeader) +
                      "\nr1,610e6,12.1e9,252,2048,1.62e-2,2.025e-3,0.1,2.563\n");
    const RunSet rs = load_runs(p, RunFormat::Csv);
    REQUIRE(rs.records.size() == 1);
    const RunRecord& r = rs.records[0];
    CHECK(r.run_id == "r1");
    CHECK(r.n_params == 610000000);
    CHECK(r.d_tokens == 12100000000);
    CHECK(r.batch_sequences == 252);
    CHECK(r.tpp() == doctest::Approx(19.8361).epsilon(1e-4));
    CHECK(r.batch_tokens() == 252 * 2048);
    CHECK(r.steps() == doctest::Approx(12.1e9 / (252.0 * 2048.0)).epsilon(1e-12));
    fs::remove(p);
}

TEST_CASE("load_runs accepts a header-only file") {
    const fs::path p = temp_file("empty.csv");
    write_text(p, std::string(kHeader) + "\n");
    CHECK(load_runs(p, RunFormat::Csv).records.empty());
    fs::remove(p);
}

TEST_CASE("load_runs rejects batch_tokens above d_tokens") {
    const fs::path p = temp_file("toolarge.csv");
    write_text(p, std::string(kHeader) + "\nr1,1e6,1e5,252,2048,,1e-3,0.1,2.5\n");
    CHECK_THROWS_AS(load_runs(p, RunFormat::Csv), InvariantViolation);
    fs::remove(p);
}

TEST_CASE("load_runs names a missing column") {
    const fs::path p = temp_file("missing.csv");
    write_text(p, "run_id,n_params,d_tokens,batch_sequences,seq_len,weight_decay\n");
    try {
        load_runs(p, RunFormat::Csv);
        FAIL("expected MissingColumn");
    } catch (const MissingColumn& e) {
        CHECK(e.column == "val_loss");
    }
    fs::remove(p);
}

TEST_CASE("load_runs requires eta_peak or eta_base plus width") {
    const fs::path p = temp_file("noeta.csv");
    write_text(p,
               "run_id,n_params,d_tokens,batch_sequences,seq_len,weight_decay,val_loss\n");
    CHECK_THROWS_AS(load_runs(p, RunFormat::Csv), MissingColumn);

    // eta_base + width derives the peak LR via the muP rule.
    const fs::path q = temp_file("etabase.csv");
    write_text(q,
               "run_id,n_params,d_tokens,batch_sequences,seq_len,weight_decay,val_loss,"
               "eta_base,width\nr1,610e6,12.1e9,252,2048,0.1,2.563,1.62e-2,2048\n");
    const RunSet rs = load_runs(q, RunFormat::Csv);
    CHECK(rs.records[0].eta_peak == doctest::Approx(2.025e-3).epsilon(1e-12));
    fs::remove(p);
    fs::remove(q);
}

TEST_CASE("load_runs reports parse errors with line numbers") {
    const fs::path p = temp_file("badline.csv");
    write_text(p, std::string(kHeader) + "\nr1,x,12.1e9,252,2048,,1e-3,0.1,2.5\n");
    try {
        load_runs(p, RunFormat::Csv);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
    fs::remove(p);
}

TEST_CASE("load_runs enforces the eta consistency invariant") {
    const fs::path p = temp_file("etabad.csv");
    write_text(p, std::string(kHeader) +
                      ",width\nr1,610e6,12.1e9,252,2048,1.62e-2,9e-3,0.1,2.563,2048\n");
    CHECK_THROWS_AS(load_runs(p, RunFormat::Csv), InvariantViolation);
    fs::remove(p);
}

TEST_CASE("load_runs rejects duplicate run ids") {
    const fs::path p = temp_file("dup.csv");
    write_text(p, std::string(kHeader) +
                      "\nr1,1e8,2e9,64,2048,,1e-3,0.1,2.9\n"
                      "r1,1e8,2e9,64,2048,,1e-3,0.2,2.8\n");
    CHECK_THROWS_AS(load_runs(p, RunFormat::Csv), InvariantViolation);
    fs::remove(p);
}

TEST_CASE("unknown CSV columns land in tags and survive a round trip") {
    const fs::path p = temp_file("tags.csv");
    write_text(p, std::string(kHeader) +
                      ",note\nr1,1e8,2e9,64,2048,,1e-3,0.1,2.9,warm start\n");
    const RunSet rs = load_runs(p, RunFormat::Csv);
    REQUIRE(rs.records[0].tags.count("note") == 1);
    CHECK(rs.records[0].tags.at("note") == "warm start");

    const fs::path q = temp_file("tags_rt.csv");
    write_runs(rs, q, RunFormat::Csv);
    const RunSet back = load_runs(q, RunFormat::Csv);
    CHECK(back.records[0].tags.at("note") == "warm start");
    fs::remove(p);
    fs::remove(q);
}

TEST_CASE("write_runs/load_runs round trip is bit exact") {
    RunSet rs;
    RunRecord r;
    r.run_id = "w1";
    r.n_params = 111000000;
    r.d_tokens = 2190000000;
    r.batch_sequences = 192;
    r.seq_len = 2048;
    r.eta_base = 1.62e-2;
    r.width = 768;
    r.eta_peak = 1.62e-2 * 256.0 / 768.0;
    r.weight_decay = 0.08432198765432101;  // many digits on purpose
    r.val_loss = 2.8731902846523714;
    r.tags["sweep"] = "lambda";
    rs.records.push_back(r);
    RunRecord r2 = r;
    r2.run_id = "w2";
    r2.eta_base.reset();
    r2.width.reset();
    r2.weight_decay = 0.1;
    rs.records.push_back(r2);

    for (RunFormat format : {RunFormat::Csv, RunFormat::Jsonl}) {
        const fs::path p =
            temp_file(format == RunFormat::Csv ? "roundtrip.csv" : "roundtrip.jsonl");
        write_runs(rs, p, format);
        const RunSet back = load_runs(p, format);
        REQUIRE(back.records.size() == rs.records.size());
        for (std::size_t i = 0; i < rs.records.size(); ++i) {
            const RunRecord& a = rs.records[i];
            const RunRecord& b = back.records[i];
            CHECK(a.run_id == b.run_id);
            CHECK(a.n_params == b.n_params);
            CHECK(a.d_tokens == b.d_tokens);
            CHECK(a.batch_sequences == b.batch_sequences);
            CHECK(a.seq_len == b.seq_len);
            CHECK(a.eta_base == b.eta_base);
            CHECK(a.eta_peak == b.eta_peak);  // bit exact
            CHECK(a.weight_decay == b.weight_decay);
            CHECK(a.val_loss == b.val_loss);
            CHECK(a.width == b.width);
            CHECK(a.tags == b.tags);
        }
        fs::remove(p);
    }
}

TEST_CASE("load_runs reads JSON lines") {
    const fs::path p = temp_file("runs.jsonl");
    write_text(p, R"({"run_id":"j1","n_params":100000000,"d_tokens":2000000000,)"
                  R"("batch_sequences":64,"seq_len":2048,"eta_peak":0.001,)"
                  R"("weight_decay":0.1,"val_loss":2.9,"tags":{"k":"v"}})"
                  "\n");
    const RunSet rs = load_runs(p, RunFormat::Jsonl);
    REQUIRE(rs.records.size() == 1);
    CHECK(rs.records[0].tags.at("k") == "v");
    fs::remove(p);
}

TEST_CASE("group_runs partitions the records") {
    RunSet rs;
    for (int i = 0; i < 4; ++i) {
        RunRecord r;
        r.run_id = "g" + std::to_string(i);
        r.n_params = (i < 2) ? 100000000 : 300000000;
        r.d_tokens = 2000000000;
        r.batch_sequences = 64 << (i % 2);
        r.seq_len = 2048;
        r.eta_peak = 1e-3;
        r.weight_decay = 0.1;
        r.val_loss = 2.5 + 0.1 * i;
        rs.records.push_back(r);
    }

    auto by_n = group_runs(rs, {RunField::NParams});
    CHECK(by_n.size() == 2);
    std::size_t total = 0;
    for (const auto& [key, records] : by_n) total += records.size();
    CHECK(total == rs.records.size());

    auto by_nb = group_runs(rs, {RunField::NParams, RunField::BatchSequences});
    CHECK(by_nb.size() == 4);

    CHECK(group_runs(RunSet{}, {RunField::NParams}).empty());
    CHECK_THROWS_AS(group_runs(rs, {}), DegenerateInput);
}

TEST_CASE("unit identity: batch tokens over seq_len") {
    RunRecord r;
    r.batch_sequences = 252;
    r.seq_len = 2048;
    CHECK(r.batch_tokens() / r.seq_len == r.batch_sequences);
}
