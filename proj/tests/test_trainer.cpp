#include "doctest.h"
#include "fdm/io.hpp"
#include "fdm/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace fdm;

namespace {

std::string tmp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

// Small enough to collect and train in seconds.
TrainConfig tiny_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.envs = 4;
    cfg.samples_per_round = 24;
    cfg.epochs = 2;
    cfg.batch = 12;
    cfg.sequences_per_episode = 2;
    cfg.terrain_size = 60;
    cfg.kinds = {TerrainKind::plane, TerrainKind::obstacles2d};
    cfg.seed = seed;
    return cfg;
}

struct CsvRow {
    int round = 0, epoch = 0;
    double pose = 0.0, risk = 0.0, stop = 0.0, total = 0.0;
};

std::vector<CsvRow> parse_metrics(const std::string& csv) {
    std::vector<CsvRow> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "round,epoch,L_pose,L_risk,L_stop,L_total");
    while (std::getline(in, line)) {
        CsvRow r;
        REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &r.round, &r.epoch, &r.pose,
                            &r.risk, &r.stop, &r.total) == 6);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("collected samples honor shapes, bounds, and the label freeze") {
    TrainConfig cfg = tiny_config(11);
    cfg.envs = 8;
    cfg.kinds = {TerrainKind::obstacles2d};
    Rng rng(5);
    const Dataset ds =
        collect_dataset(cfg, SimParams::nominal(), 0, nullptr, 40, rng);

    REQUIRE(ds.samples.size() == 40);
    CHECK(ds.n == cfg.model.n);
    CHECK(ds.u == cfg.model.scan_u);

    int risky = 0, safe = 0;
    for (const FdmSample& s : ds.samples) {
        REQUIRE(s.history_states.size() == static_cast<std::size_t>(s.n) * 3);
        REQUIRE(s.history_proprio.size() == static_cast<std::size_t>(s.n) * 12);
        REQUIRE(s.actions.size() == static_cast<std::size_t>(s.n) * 3);
        REQUIRE(s.label_poses.size() == static_cast<std::size_t>(s.n) * 3);
        REQUIRE(s.label_risks.size() == static_cast<std::size_t>(s.n));
        REQUIRE(s.scan.values.size() ==
                static_cast<std::size_t>(cfg.model.scan_u) * cfg.model.scan_v);

        for (float a : s.actions) {
            CHECK(a >= -1.0f);
            CHECK(a <= 1.0f);
        }
        // Newest history record is the anchor: relative pose (0, 0, 0).
        const std::size_t last = static_cast<std::size_t>(s.n - 1) * 3;
        CHECK(s.history_states[last] == 0.0f);
        CHECK(s.history_states[last + 1] == 0.0f);
        CHECK(s.history_states[last + 2] == 0.0f);

        int first_fail = -1;
        for (int k = 0; k < s.n; ++k) {
            if (s.label_risks[static_cast<std::size_t>(k)] != 0) {
                first_fail = k;
                break;
            }
        }
        if (first_fail >= 0) {
            ++risky;
            for (int k = first_fail; k < s.n; ++k) {
                CHECK(s.label_risks[static_cast<std::size_t>(k)] == 1);
                for (int c = 0; c < 3; ++c)
                    CHECK(s.label_poses[static_cast<std::size_t>(k) * 3 + c] ==
                          s.label_poses[static_cast<std::size_t>(first_fail) * 3 + c]);
            }
        } else {
            ++safe;
        }
    }
    CHECK(safe > 0);
    INFO("risky=", risky, " safe=", safe);
}

TEST_CASE("collection is deterministic for a fixed seed") {
    TrainConfig cfg = tiny_config(21);
    Rng a(9), b(9);
    const Dataset da = collect_dataset(cfg, SimParams::nominal(), 0, nullptr, 16, a);
    const Dataset db = collect_dataset(cfg, SimParams::nominal(), 0, nullptr, 16, b);
    REQUIRE(da.samples.size() == db.samples.size());
    for (std::size_t i = 0; i < da.samples.size(); ++i) {
        CHECK(da.samples[i].history_states == db.samples[i].history_states);
        CHECK(da.samples[i].actions == db.samples[i].actions);
        CHECK(da.samples[i].label_poses == db.samples[i].label_poses);
        CHECK(da.samples[i].label_risks == db.samples[i].label_risks);
        CHECK(da.samples[i].scan.values == db.samples[i].scan.values);
    }
}

TEST_CASE("training on a tiny dataset drives the loss down") {
    TrainConfig cfg = tiny_config(3);
    cfg.envs = 8;
    cfg.samples_per_round = 64;
    cfg.epochs = 200;
    cfg.batch = 64;
    cfg.kinds = {TerrainKind::obstacles2d};
    cfg.model.dropout = 0.0;

    Rng rng(13);
    const TrainResult res = train(cfg, SimParams::nominal(), 1, rng);
    const std::vector<CsvRow> rows = parse_metrics(res.metrics_csv);
    REQUIRE(rows.size() == 200);
    CHECK(rows.front().total > 0.0);
    CHECK(rows.back().total < 0.10 * rows.front().total);
}

TEST_CASE("metrics and checkpoints are byte-identical across reruns") {
    const std::string dir_a = tmp_path("fdm_train_a");
    const std::string dir_b = tmp_path("fdm_train_b");
    TrainConfig cfg = tiny_config(17);

    cfg.out_dir = dir_a;
    Rng ra(29);
    const TrainResult a = train(cfg, SimParams::nominal(), 2, ra);

    cfg.out_dir = dir_b;
    Rng rb(29);
    const TrainResult b = train(cfg, SimParams::nominal(), 2, rb);

    CHECK(a.metrics_csv == b.metrics_csv);
    CHECK(parse_metrics(a.metrics_csv).size() == 4);
    CHECK(read_file(dir_a + "/fdm_final.fdmck") == read_file(dir_b + "/fdm_final.fdmck"));
    CHECK(read_file(dir_a + "/train_metrics.csv") == read_file(dir_b + "/train_metrics.csv"));
    CHECK(std::filesystem::exists(dir_a + "/checkpoint_round_0.fdmck"));
    CHECK(std::filesystem::exists(dir_a + "/checkpoint_round_1.fdmck"));

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("zero rounds yields the initialized checkpoint and an empty metrics table") {
    TrainConfig cfg = tiny_config(31);
    Rng rng(37);
    TrainResult res = train(cfg, SimParams::nominal(), 0, rng);
    CHECK(res.metrics_csv == "round,epoch,L_pose,L_risk,L_stop,L_total\n");
    CHECK(res.net.param_count() == 167176);

    // Usable as-is: identity normalization is embedded.
    const std::string path = tmp_path("fdm_round0.fdmck");
    res.net.save(path);
    const FdmNet back = FdmNet::load(path);
    CHECK(back.config().n == cfg.model.n);
    std::filesystem::remove(path);
}

TEST_CASE("an absurd learning rate aborts with a divergence error") {
    TrainConfig cfg = tiny_config(41);
    cfg.lr_max = 1e308;
    cfg.lr_min = 1e308;
    Rng rng(43);
    CHECK_THROWS_AS(train(cfg, SimParams::nominal(), 1, rng), std::runtime_error);
}

TEST_CASE("fine-tuning with zero steps returns the checkpoint unchanged") {
    TrainConfig cfg = tiny_config(47);
    Rng rng(53);
    TrainResult base = train(cfg, SimParams::nominal(), 0, rng);
    const Dataset ds = collect_dataset(cfg, SimParams::nominal(), 0, nullptr, 8, rng);

    const FdmNet tuned = fine_tune(base.net, ds, ds, 0, 1e-4, 8, 1e-2, rng);

    const std::string pa = tmp_path("fdm_ft_before.fdmck");
    const std::string pb = tmp_path("fdm_ft_after.fdmck");
    base.net.save(pa);
    tuned.save(pb);
    CHECK(read_file(pa) == read_file(pb));
    std::filesystem::remove(pa);
    std::filesystem::remove(pb);
}

TEST_CASE("fine-tuning steps update the weights and reject mismatched datasets") {
    TrainConfig cfg = tiny_config(59);
    Rng rng(61);
    TrainResult base = train(cfg, SimParams::nominal(), 0, rng);
    const Dataset nominal_ds = collect_dataset(cfg, SimParams::nominal(), 0, nullptr, 8, rng);
    const Dataset shifted_ds = collect_dataset(cfg, SimParams::shifted(), 0, nullptr, 8, rng);

    const FdmNet tuned = fine_tune(base.net, nominal_ds, shifted_ds, 3, 1e-4, 8, 1e-2, rng);
    const std::string pa = tmp_path("fdm_ft2_before.fdmck");
    const std::string pb = tmp_path("fdm_ft2_after.fdmck");
    base.net.save(pa);
    tuned.save(pb);
    CHECK(read_file(pa) != read_file(pb));
    std::filesystem::remove(pa);
    std::filesystem::remove(pb);

    Dataset wrong = nominal_ds;
    wrong.n = cfg.model.n + 1;
    CHECK_THROWS_AS(fine_tune(base.net, wrong, shifted_ds, 1, 1e-4, 8, 1e-2, rng),
                    std::invalid_argument);
}
