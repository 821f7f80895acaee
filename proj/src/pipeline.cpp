#include "ridesplit/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ridesplit/emissions.hpp"
#include "ridesplit/explain.hpp"
#include "ridesplit/features.hpp"
#include "ridesplit/gbm.hpp"
#include "ridesplit/ingest.hpp"
#include "ridesplit/io_util.hpp"
#include "ridesplit/matching.hpp"
#include "ridesplit/stats.hpp"
#include "ridesplit/synth.hpp"
#include "ridesplit/trips.hpp"

namespace fs = std::filesystem;

namespace ridesplit {
namespace {

// orders_kept.csv and cfg.fixes_path re-derived once per process; every stage
// downstream of ingest works from the same reconstruction
struct Rebuilt {
    std::vector<RideOrder> orders;
    PoolIdentification pid;
    SegmentFilterStats seg_stats;
    std::size_t fixes_rows = 0;
    std::size_t fixes_malformed = 0;
};

struct EmissionSets {
    std::vector<double> singles;  // aligned with pid.singles
    std::vector<double> pools;    // aligned with pid.pools
};

struct Ctx {
    const PipelineConfig& cfg;
    RunOptions opt;
    fs::path out;
    std::vector<StageLog> stages;
    std::map<std::string, std::string> inputs;  // path -> digest, sorted
    std::optional<Rebuilt> rebuilt_cache;
    std::optional<EmissionSets> emissions_cache;

    StageLog& stage() { return stages.back(); }

    void note_input(const fs::path& path) {
        const std::string key = path.string();
        if (inputs.count(key)) return;
        inputs.emplace(key, file_digest(path));
    }

    void write_artifact(const std::string& name, const std::string& content) {
        const fs::path path = out / name;
        if (fs::exists(path) && !opt.overwrite)
            throw std::runtime_error("refusing to overwrite " + name +
                                     " (pass --overwrite)");
        write_text_file(path, content);
        stage().artifacts.push_back(name);
    }

    // for artifacts whose writer manages the file itself
    fs::path claim_artifact(const std::string& name) {
        const fs::path path = out / name;
        if (fs::exists(path) && !opt.overwrite)
            throw std::runtime_error("refusing to overwrite " + name +
                                     " (pass --overwrite)");
        stage().artifacts.push_back(name);
        return path;
    }

    fs::path require_artifact(const std::string& name,
                              const std::string& producer) const {
        const fs::path path = out / name;
        if (!fs::exists(path))
            throw std::runtime_error("missing " + name + "; run the " + producer +
                                     " stage first");
        return path;
    }
};

void log_counts(Ctx& ctx, const nlohmann::json& report) {
    for (const auto& [key, value] : report.items()) {
        if (value.is_boolean())
            ctx.stage().counts[key] = value.get<bool>() ? 1 : 0;
        else if (value.is_number_integer())
            ctx.stage().counts[key] = value.get<std::int64_t>();
    }
}

const Rebuilt& rebuilt(Ctx& ctx) {
    if (ctx.rebuilt_cache) return *ctx.rebuilt_cache;
    const fs::path kept = ctx.require_artifact("orders_kept.csv", "ingest");
    auto orders = parse_orders_file(kept.string());
    if (orders.malformed > 0)
        throw std::runtime_error("orders_kept.csv is damaged; rerun ingest");
    auto fixes = parse_fixes_file(ctx.cfg.fixes_path);
    ctx.note_input(ctx.cfg.fixes_path);
    Rebuilt rb;
    rb.orders = std::move(orders.records);
    rb.fixes_rows = fixes.total_rows;
    rb.fixes_malformed = fixes.malformed;
    const SegmentFilterLimits limits{ctx.cfg.seg_max_t_s, ctx.cfg.seg_max_d_m,
                                     ctx.cfg.seg_max_v_ms};
    rb.pid = identify_pool_trips(rb.orders, fixes.records, limits, 1, &rb.seg_stats);
    ctx.rebuilt_cache = std::move(rb);
    return *ctx.rebuilt_cache;
}

const EmissionSets& emission_sets(Ctx& ctx) {
    if (ctx.emissions_cache) return *ctx.emissions_cache;
    const Rebuilt& rb = rebuilt(ctx);
    EmissionSets es;
    es.singles.reserve(rb.pid.singles.size());
    for (const auto& r : rb.pid.singles)
        es.singles.push_back(ride_emission(r, ctx.cfg.copert));
    es.pools.reserve(rb.pid.pools.size());
    for (const auto& t : rb.pid.pools)
        es.pools.push_back(pool_emission(t, ctx.cfg.copert));
    ctx.emissions_cache = std::move(es);
    return *ctx.emissions_cache;
}

ReductionResult reductions(Ctx& ctx, BaselineTable* table_out = nullptr) {
    const Rebuilt& rb = rebuilt(ctx);
    const EmissionSets& es = emission_sets(ctx);
    const GridSpec grid = ctx.cfg.grid();
    BaselineTable table =
        build_baselines(rb.pid.singles, es.singles, grid,
                        static_cast<std::size_t>(ctx.cfg.min_substitutes));
    ReductionResult red = reduce_trips(rb.pid.pools, es.pools, table, grid);
    if (table_out) *table_out = std::move(table);
    return red;
}

Dataset dataset_from_records(const std::vector<TripRecord>& records,
                             const std::vector<std::string>& features,
                             const std::string& target) {
    Dataset d;
    d.feature_names = features;
    for (const auto& name : features) {
        const TripColumn* col = find_column(name);
        if (!col) throw std::runtime_error("unknown dataset column: " + name);
        std::vector<double> c;
        c.reserve(records.size());
        for (const auto& r : records) c.push_back(r.*(col->member));
        d.columns.push_back(std::move(c));
    }
    const TripColumn* tgt = find_column(target);
    if (!tgt) throw std::runtime_error("unknown dataset column: " + target);
    d.target.reserve(records.size());
    for (const auto& r : records) d.target.push_back(r.*(tgt->member));
    return d;
}

Dataset head(const Dataset& d, std::size_t n) {
    const auto count = static_cast<std::ptrdiff_t>(std::min(n, d.n_rows()));
    Dataset out;
    out.feature_names = d.feature_names;
    out.columns.reserve(d.columns.size());
    for (const auto& c : d.columns)
        out.columns.emplace_back(c.begin(), c.begin() + count);
    out.target.assign(d.target.begin(), d.target.begin() + count);
    return out;
}

std::size_t feature_index(const std::vector<std::string>& names,
                          const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
        throw std::runtime_error("model does not use feature: " + name);
    return static_cast<std::size_t>(it - names.begin());
}

void stage_ingest(Ctx& ctx) {
    ctx.note_input(ctx.cfg.orders_path);
    const auto parsed = parse_orders_file(ctx.cfg.orders_path);
    const auto filtered = filter_orders(parsed.records, ctx.cfg.grid(),
                                        ctx.cfg.min_tt_s, ctx.cfg.max_tt_s);
    ctx.write_artifact("orders_kept.csv", serialize_orders(filtered.kept));
    nlohmann::json rep;
    rep["rows_total"] = parsed.total_rows;
    rep["malformed"] = parsed.malformed;
    rep["parsed"] = parsed.records.size();
    rep["dropped_too_short"] = filtered.dropped_too_short;
    rep["dropped_too_long"] = filtered.dropped_too_long;
    rep["dropped_out_of_region"] = filtered.dropped_out_of_region;
    rep["kept"] = filtered.kept.size();
    ctx.write_artifact("ingest_report.json", rep.dump(1) + "\n");
    log_counts(ctx, rep);
}

void stage_trips(Ctx& ctx) {
    const Rebuilt& rb = rebuilt(ctx);

    CsvWriter pools;
    pools.header({"trip_id", "driver_id", "nsr", "start_ts", "end_ts", "tt_s",
                  "t_s", "d_m", "c", "td_m"});
    std::size_t member_rides = 0;
    for (const auto& t : rb.pid.pools) {
        member_rides += t.rides.size();
        pools.field(t.trip_id)
            .field(t.driver_id)
            .field(t.nsr)
            .field(t.start_ts)
            .field(t.end_ts)
            .field(t.TT)
            .field(t.T)
            .field(t.D)
            .field(t.C)
            .field(t.TD);
        pools.end_row();
    }
    ctx.write_artifact("pool_trips.csv", pools.str());

    CsvWriter singles;
    singles.header({"order_id", "driver_id", "start_ts", "end_ts", "tt_s", "t_s",
                    "d_m", "c", "td_m"});
    for (const auto& r : rb.pid.singles) {
        singles.field(r.order.order_id)
            .field(r.driver_id)
            .field(r.order.start_ts)
            .field(r.order.end_ts)
            .field(r.order.trip_time_s())
            .field(r.T)
            .field(r.D)
            .field(r.C)
            .field(r.TD);
        singles.end_row();
    }
    ctx.write_artifact("single_rides.csv", singles.str());

    nlohmann::json rep;
    rep["orders_in"] = rb.orders.size();
    rep["fixes_rows"] = rb.fixes_rows;
    rep["fixes_malformed"] = rb.fixes_malformed;
    rep["seg_dropped_t"] = rb.seg_stats.dropped_t;
    rep["seg_dropped_d"] = rb.seg_stats.dropped_d;
    rep["seg_dropped_v"] = rb.seg_stats.dropped_v;
    rep["excluded_no_fixes"] = rb.pid.excluded_no_fixes;
    rep["excluded_empty_trajectory"] = rb.pid.excluded_empty_trajectory;
    rep["single_rides"] = rb.pid.singles.size();
    rep["pool_trips"] = rb.pid.pools.size();
    rep["pool_member_rides"] = member_rides;
    ctx.write_artifact("trips_report.json", rep.dump(1) + "\n");
    log_counts(ctx, rep);
}

void stage_emissions(Ctx& ctx) {
    const Rebuilt& rb = rebuilt(ctx);
    const EmissionSets& es = emission_sets(ctx);
    CsvWriter w;
    w.header({"kind", "id", "e_g"});
    for (std::size_t i = 0; i < rb.pid.pools.size(); ++i) {
        w.field("pool").field(rb.pid.pools[i].trip_id).field(es.pools[i]);
        w.end_row();
    }
    for (std::size_t i = 0; i < rb.pid.singles.size(); ++i) {
        w.field("single").field(rb.pid.singles[i].order.order_id).field(es.singles[i]);
        w.end_row();
    }
    ctx.write_artifact("emissions.csv", w.str());

    nlohmann::json rep;
    rep["pool_trips"] = es.pools.size();
    rep["single_rides"] = es.singles.size();
    rep["pool_e_g_total"] = std::accumulate(es.pools.begin(), es.pools.end(), 0.0);
    rep["single_e_g_total"] =
        std::accumulate(es.singles.begin(), es.singles.end(), 0.0);
    ctx.write_artifact("emissions_report.json", rep.dump(1) + "\n");
    log_counts(ctx, rep);
}

void stage_match(Ctx& ctx) {
    BaselineTable table;
    const ReductionResult red = reductions(ctx, &table);

    std::ostringstream baselines;
    table.save(baselines);
    ctx.write_artifact("baselines.csv", baselines.str());

    CsvWriter w;
    w.header({"trip_id", "sd_m", "er_g", "erp", "err_g_per_km"});
    for (const auto& r : red.records) {
        w.field(r.trip_id).field(r.sd_m).field(r.er_g).field(r.erp).field(
            r.err_g_per_km);
        w.end_row();
    }
    ctx.write_artifact("reductions.csv", w.str());

    nlohmann::json rep;
    rep["baseline_entries"] = table.size();
    rep["matched_trips"] = red.records.size();
    rep["unmatched_trips"] = red.unmatched_trips;
    rep["off_grid_trips"] = red.off_grid_trips;
    ctx.write_artifact("match_report.json", rep.dump(1) + "\n");
    log_counts(ctx, rep);
}

void stage_features(Ctx& ctx) {
    const Rebuilt& rb = rebuilt(ctx);
    const ReductionResult red = reductions(ctx);

    std::unordered_map<std::string, const ReductionRecord*> by_id;
    for (const auto& r : red.records) by_id.emplace(r.trip_id, &r);
    std::vector<TripRecord> records;
    records.reserve(red.records.size());
    for (const auto& t : rb.pid.pools) {
        const auto it = by_id.find(t.trip_id);
        if (it == by_id.end()) continue;
        records.push_back(build_record(t, *it->second, ctx.cfg.utc_offset_s));
    }

    ValidityStats vstats;
    const auto valid = validity_filter(records, ctx.cfg.validity, &vstats);
    const auto& iqr_cols =
        ctx.cfg.iqr_columns.empty() ? default_iqr_columns() : ctx.cfg.iqr_columns;
    const IqrResult iqr = iqr_filter(valid, ctx.cfg.iqr_factor, iqr_cols);

    ctx.write_artifact("dataset.csv", dataset_to_csv(iqr.kept));

    std::vector<std::string> cols;
    cols.reserve(trip_columns().size());
    for (const auto& c : trip_columns()) cols.emplace_back(c.name);
    const auto matrix = correlation_matrix(iqr.kept, cols);
    CsvWriter cw;
    std::vector<std::string> header = {"column"};
    header.insert(header.end(), cols.begin(), cols.end());
    cw.header(header);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        cw.field(cols[i]);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (matrix[i][j])
                cw.field(*matrix[i][j]);
            else
                cw.field("");
        }
        cw.end_row();
    }
    ctx.write_artifact("correlations.csv", cw.str());

    nlohmann::json rep;
    rep["records_built"] = records.size();
    rep["dropped_overlap_distance"] = vstats.dropped_overlap_d;
    rep["dropped_overlap_time"] = vstats.dropped_overlap_t;
    rep["dropped_nsr"] = vstats.dropped_nsr;
    rep["iqr_dropped"] = iqr.dropped;
    rep["iqr_skipped_small_sample"] = iqr.skipped_small_sample;
    rep["final_rows"] = iqr.kept.size();
    ctx.write_artifact("features_report.json", rep.dump(1) + "\n");
    log_counts(ctx, rep);
}

void stage_report(Ctx& ctx) {
    const Rebuilt& rb = rebuilt(ctx);

    const auto local_hour = [&ctx](std::int64_t ts) {
        std::int64_t s = (ts + ctx.cfg.utc_offset_s) % 86400;
        if (s < 0) s += 86400;
        return static_cast<std::size_t>(s / 3600);
    };
    std::array<std::int64_t, 24> single_hours{};
    std::array<std::int64_t, 24> shared_hours{};
    for (const auto& r : rb.pid.singles) ++single_hours[local_hour(r.order.start_ts)];
    for (const auto& t : rb.pid.pools)
        for (const auto& r : t.rides) ++shared_hours[local_hour(r.order.start_ts)];
    CsvWriter hw;
    hw.header({"hour", "single_rides", "shared_rides"});
    for (int h = 0; h < 24; ++h) {
        hw.field(h).field(single_hours[h]).field(shared_hours[h]);
        hw.end_row();
    }
    ctx.write_artifact("hourly_counts.csv", hw.str());

    // origin = first pickup of the trip, destination = last dropoff
    const GridSpec grid = ctx.cfg.grid();
    std::map<std::array<int, 4>, std::int64_t> od_counts;
    std::int64_t off_grid = 0;
    for (const auto& t : rb.pid.pools) {
        const RideTrajectory* first = nullptr;
        const RideTrajectory* last = nullptr;
        for (const auto& r : t.rides) {
            if (!first || r.order.start_ts < first->order.start_ts) first = &r;
            if (!last || r.order.end_ts > last->order.end_ts) last = &r;
        }
        const auto o = assign_grid(first->order.pickup, grid);
        const auto d = assign_grid(last->order.dropoff, grid);
        if (!o || !d) {
            ++off_grid;
            continue;
        }
        ++od_counts[{o->col, o->row, d->col, d->row}];
    }
    CsvWriter ow;
    ow.header({"o_col", "o_row", "d_col", "d_row", "n_trips"});
    for (const auto& [key, n] : od_counts) {
        ow.field(key[0]).field(key[1]).field(key[2]).field(key[3]).field(n);
        ow.end_row();
    }
    ctx.write_artifact("od_grid_counts.csv", ow.str());

    const auto rows =
        read_dataset(ctx.require_artifact("dataset.csv", "features").string());
    std::map<std::pair<int, int>, std::vector<double>> groups;
    for (const auto& r : rows)
        groups[{static_cast<int>(r.nsr), static_cast<int>(r.peak_hours)}].push_back(
            r.err);
    CsvWriter gw;
    gw.header({"nsr", "peak_hours", "n", "mean_err", "p25", "median_err", "p75"});
    for (const auto& [key, values] : groups) {
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) /
            static_cast<double>(values.size());
        gw.field(key.first)
            .field(key.second)
            .field(static_cast<std::int64_t>(values.size()))
            .field(mean)
            .field(quantile(values, 0.25))
            .field(quantile(values, 0.5))
            .field(quantile(values, 0.75));
        gw.end_row();
    }
    ctx.write_artifact("err_by_group.csv", gw.str());

    nlohmann::json rep;
    rep["single_rides"] = rb.pid.singles.size();
    rep["pool_trips"] = rb.pid.pools.size();
    rep["od_pairs"] = od_counts.size();
    rep["od_off_grid_trips"] = off_grid;
    rep["dataset_rows"] = rows.size();
    log_counts(ctx, rep);
}

void stage_train(Ctx& ctx) {
    const auto rows =
        read_dataset(ctx.require_artifact("dataset.csv", "features").string());
    const Dataset data = dataset_from_records(rows, model_feature_names(), "err");
    const std::uint64_t seed = ctx.opt.seed.value_or(ctx.cfg.seed);
    const SplitResult split = train_test_split(data, ctx.cfg.split_ratio, seed);
    if (split.train.n_rows() < 2 || split.test.n_rows() < 1)
        throw std::runtime_error("train/test split leaves a side empty (" +
                                 std::to_string(data.n_rows()) + " rows)");

    const GridSearchResult gs = grid_search_cv(split.train, ctx.cfg.search,
                                               ctx.cfg.hp, ctx.cfg.cv_folds, seed);
    const BoostedModel model = train_gbm(split.train, gs.best);
    const Metrics gbm_metrics = evaluate(model.predict(split.test), split.test.target);
    const OlsModel ols = ols_fit(split.train);
    const Metrics ols_metrics = evaluate(ols.predict(split.test), split.test.target);

    CsvWriter w;
    w.header(
        {"model", "phase", "iterations", "learning_rate", "depth", "rmse", "mae", "r2"});
    for (const auto& combo : gs.combos) {
        w.field("gbm")
            .field("cv")
            .field(combo.hp.iterations)
            .field(combo.hp.learning_rate)
            .field(combo.hp.depth)
            .field(combo.mean_cv_rmse)
            .field("")
            .field("");
        w.end_row();
    }
    w.field("gbm")
        .field("test")
        .field(gs.best.iterations)
        .field(gs.best.learning_rate)
        .field(gs.best.depth)
        .field(gbm_metrics.rmse)
        .field(gbm_metrics.mae);
    if (gbm_metrics.r2)
        w.field(*gbm_metrics.r2);
    else
        w.field("");
    w.end_row();
    w.field("ols").field("test").field("").field("").field("").field(
        ols_metrics.rmse);
    w.field(ols_metrics.mae);
    if (ols_metrics.r2)
        w.field(*ols_metrics.r2);
    else
        w.field("");
    w.end_row();
    ctx.write_artifact("metrics.csv", w.str());

    model.save_file(ctx.claim_artifact("model.json").string());

    nlohmann::json oj;
    oj["format"] = "ols-model";
    oj["version"] = 1;
    oj["intercept"] = ols.intercept;
    oj["coef"] = ols.coef;
    oj["feature_names"] = ols.feature_names;
    ctx.write_artifact("ols.json", oj.dump(1) + "\n");

    nlohmann::json rep;
    rep["dataset_rows"] = data.n_rows();
    rep["train_rows"] = split.train.n_rows();
    rep["test_rows"] = split.test.n_rows();
    rep["combos_evaluated"] = gs.combos.size();
    rep["best_iterations"] = gs.best.iterations;
    rep["best_depth"] = gs.best.depth;
    log_counts(ctx, rep);
}

void stage_explain(Ctx& ctx) {
    const BoostedModel model =
        BoostedModel::load_file(ctx.require_artifact("model.json", "train").string());
    const auto rows =
        read_dataset(ctx.require_artifact("dataset.csv", "features").string());
    if (rows.empty()) throw std::runtime_error("dataset.csv has no rows");
    const Dataset data = dataset_from_records(rows, model.feature_names, "err");

    const std::size_t n_background =
        std::min<std::size_t>(static_cast<std::size_t>(ctx.cfg.shap_background),
                              data.n_rows());
    const std::size_t n_sample = std::min<std::size_t>(
        static_cast<std::size_t>(ctx.cfg.shap_sample), data.n_rows());
    const Dataset background = head(data, n_background);
    const Dataset sample = head(data, n_sample);

    std::vector<Explanation> explanations;
    explanations.reserve(n_sample);
    for (std::size_t i = 0; i < n_sample; ++i)
        explanations.push_back(shapley_exact(model, sample.row(i), background));

    CsvWriter sw;
    std::vector<std::string> header = {"trip_id", "phi0"};
    for (const auto& name : model.feature_names) header.push_back("phi_" + name);
    header.emplace_back("prediction");
    sw.header(header);
    for (std::size_t i = 0; i < n_sample; ++i) {
        sw.field(rows[i].trip_id).field(explanations[i].phi0);
        for (const double phi : explanations[i].phi) sw.field(phi);
        sw.field(explanations[i].prediction);
        sw.end_row();
    }
    ctx.write_artifact("shap_values.csv", sw.str());

    CsvWriter iw;
    iw.header({"feature", "mean_abs_phi"});
    for (const auto& entry : shap_importance(explanations)) {
        iw.field(model.feature_names[entry.feature]).field(entry.importance);
        iw.end_row();
    }
    ctx.write_artifact("shap_importance.csv", iw.str());

    const std::size_t dep_j =
        feature_index(model.feature_names, ctx.cfg.dependence_feature);
    const std::size_t dep_h =
        feature_index(model.feature_names, ctx.cfg.dependence_color);
    const auto dependence = shap_dependence(explanations, sample, dep_j, dep_h);
    CsvWriter dw;
    dw.header({"trip_id", ctx.cfg.dependence_feature,
               "phi_" + ctx.cfg.dependence_feature, ctx.cfg.dependence_color});
    for (std::size_t i = 0; i < dependence.size(); ++i) {
        dw.field(rows[i].trip_id)
            .field(dependence[i].x_j)
            .field(dependence[i].phi_j)
            .field(dependence[i].x_h);
        dw.end_row();
    }
    ctx.write_artifact("shap_dependence.csv", dw.str());

    const auto& pdp_features =
        ctx.cfg.pdp_features.empty() ? model.feature_names : ctx.cfg.pdp_features;
    const auto grid_points = static_cast<std::size_t>(ctx.cfg.pdp_points);
    for (const auto& name : pdp_features) {
        const std::size_t fi = feature_index(model.feature_names, name);
        const PdpResult res = pdp(model, background, {fi}, {}, grid_points);
        CsvWriter pw;
        pw.header({"value", "mean_prediction", "n_ref"});
        for (std::size_t i = 0; i < res.grids[0].size(); ++i) {
            pw.field(res.grids[0][i])
                .field(res.values[i])
                .field(static_cast<std::int64_t>(res.histogram[i]));
            pw.end_row();
        }
        ctx.write_artifact("pdp_" + name + ".csv", pw.str());
    }

    const auto colon = ctx.cfg.pdp_pair.find(':');
    const std::string pair_a = ctx.cfg.pdp_pair.substr(0, colon);
    const std::string pair_b = ctx.cfg.pdp_pair.substr(colon + 1);
    const std::size_t ia = feature_index(model.feature_names, pair_a);
    const std::size_t ib = feature_index(model.feature_names, pair_b);
    const PdpResult res2 = pdp(model, background, {ia, ib}, {}, grid_points);
    CsvWriter p2;
    p2.header({pair_a, pair_b, "mean_prediction", "n_ref"});
    for (std::size_t i = 0; i < res2.grids[0].size(); ++i) {
        for (std::size_t k = 0; k < res2.grids[1].size(); ++k) {
            const std::size_t flat = i * res2.grids[1].size() + k;
            p2.field(res2.grids[0][i])
                .field(res2.grids[1][k])
                .field(res2.values[flat])
                .field(static_cast<std::int64_t>(res2.histogram[flat]));
            p2.end_row();
        }
    }
    ctx.write_artifact("pdp2_" + pair_a + "__" + pair_b + ".csv", p2.str());

    nlohmann::json rep;
    rep["explained_rows"] = n_sample;
    rep["background_rows"] = n_background;
    rep["pdp_features"] = pdp_features.size();
    log_counts(ctx, rep);
}

void stage_synth(Ctx& ctx) {
    ScenarioSpec spec = ctx.cfg.scenario;
    if (ctx.opt.seed) spec.seed = *ctx.opt.seed;
    const SynthResult res = generate_scenario(spec);
    ctx.write_artifact("orders.csv", res.orders_csv);
    ctx.write_artifact("fixes.csv", res.fixes_csv);
    ctx.write_artifact("ground_truth.json", res.ground_truth_json);

    const auto data_rows = [](const std::string& csv) {
        const auto lines = std::count(csv.begin(), csv.end(), '\n');
        return std::max<std::int64_t>(0, lines - 1);  // minus the header
    };
    auto& counts = ctx.stage().counts;
    counts["orders"] = data_rows(res.orders_csv);
    counts["fixes"] = data_rows(res.fixes_csv);
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["paths"] = {{"orders", cfg.orders_path}, {"fixes", cfg.fixes_path}};
    j["grid"] = {{"min_lon", cfg.grid_min_lon}, {"min_lat", cfg.grid_min_lat},
                 {"max_lon", cfg.grid_max_lon}, {"max_lat", cfg.grid_max_lat},
                 {"n_cols", cfg.grid_n_cols},   {"n_rows", cfg.grid_n_rows},
                 {"cell_size_m", cfg.grid_cell_size_m}};
    j["filters"] = {{"min_tt_s", cfg.min_tt_s},
                    {"max_tt_s", cfg.max_tt_s},
                    {"seg_max_t_s", cfg.seg_max_t_s},
                    {"seg_max_d_m", cfg.seg_max_d_m},
                    {"seg_max_v_ms", cfg.seg_max_v_ms},
                    {"overlap_min_d_m", cfg.validity.min_overlap_d_m},
                    {"overlap_min_t_s", cfg.validity.min_overlap_t_s},
                    {"nsr_allowed", cfg.validity.allowed_nsr},
                    {"iqr_factor", cfg.iqr_factor},
                    {"iqr_columns", cfg.iqr_columns},
                    {"utc_offset_s", cfg.utc_offset_s},
                    {"min_substitutes", cfg.min_substitutes}};
    j["copert"] = {{"pollutant", cfg.copert.pollutant},
                   {"alpha", cfg.copert.alpha},
                   {"beta", cfg.copert.beta},
                   {"gamma", cfg.copert.gamma},
                   {"delta", cfg.copert.delta},
                   {"epsilon", cfg.copert.epsilon},
                   {"zeta", cfg.copert.zeta},
                   {"eta", cfg.copert.eta},
                   {"v_min_kmh", cfg.copert.v_min_kmh},
                   {"v_max_kmh", cfg.copert.v_max_kmh}};
    j["model"] = {{"split_ratio", cfg.split_ratio},
                  {"seed", cfg.seed},
                  {"cv_folds", cfg.cv_folds},
                  {"grid_iterations", cfg.search.iterations},
                  {"grid_learning_rates", cfg.search.learning_rates},
                  {"grid_depths", cfg.search.depths},
                  {"n_bins", cfg.hp.n_bins},
                  {"min_samples_leaf", cfg.hp.min_samples_leaf},
                  {"growth", to_string(cfg.hp.growth)},
                  {"max_leaves", cfg.hp.max_leaves}};
    j["explain"] = {{"shap_sample", cfg.shap_sample},
                    {"shap_background", cfg.shap_background},
                    {"pdp_points", cfg.pdp_points},
                    {"pdp_features", cfg.pdp_features},
                    {"pdp_pair", cfg.pdp_pair},
                    {"dependence_feature", cfg.dependence_feature},
                    {"dependence_color", cfg.dependence_color}};
    const ScenarioSpec& sc = cfg.scenario;
    j["scenario"] = {{"seed", sc.seed},
                     {"min_lon", sc.min_lon},
                     {"min_lat", sc.min_lat},
                     {"sampling_interval_s", sc.sampling_interval_s},
                     {"n_pool_nsr2", sc.n_pool_nsr2},
                     {"n_pool_nsr3", sc.n_pool_nsr3},
                     {"n_substitutes", sc.n_substitutes},
                     {"n_singles", sc.n_singles},
                     {"n_emission_rides", sc.n_emission_rides},
                     {"n_calibration_rides", sc.n_calibration_rides},
                     {"speeds_kmh", sc.speeds_kmh},
                     {"min_ride_steps", sc.min_ride_steps},
                     {"max_ride_steps", sc.max_ride_steps},
                     {"min_overlap_steps", sc.min_overlap_steps},
                     {"max_overlap_steps", sc.max_overlap_steps},
                     {"max_bounces", sc.max_bounces},
                     {"target_noise_sigma", sc.target_noise_sigma},
                     {"planted_too_short", sc.planted.orders_too_short},
                     {"planted_too_long", sc.planted.orders_too_long},
                     {"planted_out_of_region", sc.planted.orders_out_of_region},
                     {"planted_seg_gap", sc.planted.seg_gap},
                     {"planted_seg_jump", sc.planted.seg_jump},
                     {"planted_seg_speed", sc.planted.seg_speed},
                     {"planted_pool_nsr4", sc.planted.pool_nsr4},
                     {"planted_pool_low_overlap_distance",
                      sc.planted.pool_low_overlap_distance},
                     {"planted_pool_low_overlap_time",
                      sc.planted.pool_low_overlap_time},
                     {"planted_iqr_outlier", sc.planted.iqr_outlier}};
    return j;
}

void write_manifest(Ctx& ctx, const std::string& command) {
    nlohmann::json m;
    m["format"] = "ridesplit-manifest";
    m["version"] = 1;
    m["command"] = command;
    // the seed the run's stochastic stages actually used
    m["seed"] = ctx.opt.seed.value_or(command == "synth" ? ctx.cfg.scenario.seed
                                                         : ctx.cfg.seed);
    m["workers"] = ctx.opt.workers;
    m["config"] = config_to_json(ctx.cfg);
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& [path, digest] : ctx.inputs)
        inputs.push_back({{"path", path}, {"digest", digest}});
    m["inputs"] = std::move(inputs);
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : ctx.stages)
        stages.push_back({{"name", s.name},
                          {"counts", s.counts},
                          {"artifacts", s.artifacts}});
    m["stages"] = std::move(stages);

    const std::string name = "manifest_" + command + ".json";
    const fs::path path = ctx.out / name;
    if (fs::exists(path) && !ctx.opt.overwrite)
        throw std::runtime_error("refusing to overwrite " + name +
                                 " (pass --overwrite)");
    write_text_file(path, m.dump(1) + "\n");
}

using StageFn = void (*)(Ctx&);

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
    static const std::vector<std::pair<std::string, StageFn>> table = {
        {"ingest", stage_ingest},     {"trips", stage_trips},
        {"emissions", stage_emissions}, {"match", stage_match},
        {"features", stage_features}, {"report", stage_report},
        {"train", stage_train},       {"explain", stage_explain},
        {"synth", stage_synth}};
    return table;
}

}  // namespace

const std::vector<std::string>& pipeline_commands() {
    static const std::vector<std::string> commands = [] {
        std::vector<std::string> out;
        for (const auto& entry : stage_table()) out.push_back(entry.first);
        out.emplace_back("all");
        return out;
    }();
    return commands;
}

std::vector<StageLog> run_pipeline(const std::string& command,
                                   const PipelineConfig& cfg,
                                   const RunOptions& opt) {
    validate_config(cfg);
    if (opt.out_dir.empty())
        throw std::invalid_argument("an output directory is required");
    std::vector<std::pair<std::string, StageFn>> plan;
    if (command == "all") {
        for (const auto& entry : stage_table())
            if (entry.first != "synth") plan.push_back(entry);
    } else {
        const auto& table = stage_table();
        const auto it =
            std::find_if(table.begin(), table.end(),
                         [&](const auto& e) { return e.first == command; });
        if (it == table.end()) {
            std::string known;
            for (const auto& name : pipeline_commands())
                known += (known.empty() ? "" : ", ") + name;
            throw std::invalid_argument("unknown command: " + command +
                                        " (expected one of " + known + ")");
        }
        plan.push_back(*it);
    }

    Ctx ctx{cfg, opt, fs::path(opt.out_dir), {}, {}, {}, {}};
    if (ctx.opt.workers < 1) ctx.opt.workers = 1;
    fs::create_directories(ctx.out);
    for (const auto& [name, fn] : plan) {
        ctx.stages.push_back(StageLog{name, {}, {}});
        try {
            fn(ctx);
        } catch (const std::exception& e) {
            throw std::runtime_error(name + ": " + e.what());
        }
    }
    write_manifest(ctx, command);
    return ctx.stages;
}

}  // namespace ridesplit
