#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shelfalign/alignment.hpp"
#include "shelfalign/detection.hpp"
#include "shelfalign/errors.hpp"
#include "shelfalign/evaluation.hpp"
#include "shelfalign/features.hpp"
#include "shelfalign/image.hpp"
#include "shelfalign/ism.hpp"
#include "shelfalign/matching.hpp"
#include "shelfalign/planogram.hpp"
#include "shelfalign/search.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shelfalign;

namespace {

void write_text_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

template <typename Img>
void write_png_atomic(const Img& img, const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    save_png(img, tmp.string());
    fs::rename(tmp, path);
}

struct CommonOpts {
    std::string shelf_path;
    std::string planogram_path;
    std::string models_dir;
    std::string out_dir = ".";
    std::string config_path;
    std::optional<double> alpha_decay;
    std::optional<int> max_iters;
    std::optional<double> sigma;
    std::optional<double> iou_thresh;
    std::optional<std::uint64_t> seed;
    bool overlay = true;
    bool dump_votes = false;
};

json load_config_json(const std::string& flag_path) {
    std::string path = flag_path;
    if (path.empty()) {
        if (const char* env = std::getenv("SHELFALIGN_CONFIG")) path = env;
    }
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ParseError("config '" + path + "': " + e.what());
    }
}

SearchConfig resolve_config(const CommonOpts& opts) {
    SearchConfig cfg = search_config_from_json(load_config_json(opts.config_path));
    if (opts.alpha_decay) {
        if (!(*opts.alpha_decay > 0.0) || *opts.alpha_decay >= 1.0)
            throw std::invalid_argument("--alpha-decay must be in (0, 1)");
        cfg.alpha_decay = *opts.alpha_decay;
    }
    if (opts.max_iters) {
        if (*opts.max_iters < 1) throw std::invalid_argument("--max-iters must be >= 1");
        cfg.max_iterations = *opts.max_iters;
    }
    if (opts.sigma) {
        if (!(*opts.sigma > 0.0)) throw std::invalid_argument("--sigma must be positive");
        cfg.vote.sigma = *opts.sigma;
    }
    if (opts.iou_thresh) {
        if (!(*opts.iou_thresh > 0.0) || *opts.iou_thresh >= 1.0)
            throw std::invalid_argument("--iou-thresh must be in (0, 1)");
        cfg.nms_iou_threshold = *opts.iou_thresh;
    }
    return cfg;
}

std::string find_model_file(const std::string& models_dir, const std::string& id) {
    for (const char* ext : {".png", ".jpg", ".jpeg", ".shft"}) {
        fs::path candidate = fs::path(models_dir) / (id + ext);
        if (fs::exists(candidate)) return candidate.string();
    }
    return {};
}

std::vector<ObjectModel> load_models(const ReferencePlanogram& ref, const std::string& models_dir,
                                     const ExtractorParams& params) {
    std::vector<ObjectModel> models;
    for (const ModelRef& m : ref.models) {
        std::string path = m.image_path;
        if ((path.empty() || !fs::exists(path)) && !models_dir.empty()) {
            std::string found = find_model_file(models_dir, m.id);
            if (!found.empty()) path = found;
        }
        if (path.empty() || !fs::exists(path)) {
            throw IoError("model image for '" + m.id + "' not found" +
                          (path.empty() ? "" : " at '" + path + "'"));
        }
        if (fs::path(path).extension() == ".shft") {
            ObjectModel om;
            om.id = m.id;
            om.features = import_features(path);
            om.width = m.width > 0 ? m.width : om.features.source_width;
            om.height = m.height > 0 ? m.height : om.features.source_height;
            models.push_back(std::move(om));
        } else {
            models.push_back(make_model(m.id, load_image(path), params));
        }
    }
    return models;
}

void dump_vote_matrices(const GrayImage& shelf, const std::vector<ObjectModel>& models,
                        const SearchConfig& cfg, const fs::path& out_dir) {
    FeatureSet shelf_fs = extract_features(shelf, cfg.extractor);
    double tau = matching_threshold(1.0);
    for (const ObjectModel& m : models) {
        if (m.features.empty()) continue;
        auto matches = match_features(shelf_fs, m.features, tau);
        VoteMatrix vm =
            build_vote_matrix(m.id, matches, shelf_fs, m.features, m.width, m.height, cfg.vote);
        save_vote_matrix_png(vm, (out_dir / ("votes_" + m.id + ".png")).string());
    }
}

int cmd_detect(const CommonOpts& opts) {
    SearchConfig cfg = resolve_config(opts);
    GrayImage shelf = load_image(opts.shelf_path);
    ReferencePlanogram ref = load_reference(opts.planogram_path);
    std::vector<ObjectModel> models = load_models(ref, opts.models_dir, cfg.extractor);

    FeatureSet shelf_fs = extract_features(shelf, cfg.extractor);
    std::vector<DetectedObject> detections = detect_objects(shelf_fs, models, 1.0, cfg);
    for (DetectedObject& s : find_empty_and_unknown(shelf, detections, cfg.empty_space)) {
        detections.push_back(std::move(s));
    }

    fs::create_directories(opts.out_dir);
    json out{{"shelf", opts.shelf_path},
             {"shelf_id", ref.planogram.shelf_id},
             {"detections", detections},
             {"config", cfg}};
    write_json_atomic(fs::path(opts.out_dir) / "detections.json", out);
    if (opts.overlay) {
        render_overlay(shelf, detections, (fs::path(opts.out_dir) / "overlay.png").string());
    }
    if (opts.dump_votes) dump_vote_matrices(shelf, models, cfg, opts.out_dir);
    return 0;
}

int cmd_comply(const CommonOpts& opts) {
    SearchConfig cfg = resolve_config(opts);
    GrayImage shelf = load_image(opts.shelf_path);
    ReferencePlanogram ref = load_reference(opts.planogram_path);
    std::vector<ObjectModel> models = load_models(ref, opts.models_dir, cfg.extractor);

    ComplianceReport report = run_compliance(shelf, models, ref.planogram, cfg);

    fs::create_directories(opts.out_dir);
    json out = report;
    out["config"] = cfg;
    write_json_atomic(fs::path(opts.out_dir) / "report.json", out);
    write_text_atomic(fs::path(opts.out_dir) / "alignment.txt",
                      render_alignment_table(report.outcome));
    if (opts.overlay) {
        render_overlay(shelf, report.detections,
                       (fs::path(opts.out_dir) / "overlay.png").string());
    }
    if (opts.dump_votes) dump_vote_matrices(shelf, models, cfg, opts.out_dir);
    std::printf("mu=%.4f\n", report.final_mu);
    return 0;
}

std::vector<DetectedObject> detections_from_json(const json& j) {
    std::vector<DetectedObject> out;
    for (const auto& dj : j.at("detections")) {
        DetectedObject d;
        d.object_id = dj.at("id").get<std::string>();
        std::string kind = dj.value("kind", "object");
        d.kind = kind == "empty" ? DetectionKind::empty_space
                                 : (kind == "unknown" ? DetectionKind::unknown
                                                      : DetectionKind::object);
        const auto& c = dj.at("center");
        d.cx = c.at(0).get<double>();
        d.cy = c.at(1).get<double>();
        const auto& b = dj.at("bbox");
        d.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>()};
        d.vote = dj.value("vote", 0.0);
        out.push_back(std::move(d));
    }
    return out;
}

AlignmentOutcome outcome_from_json(const json& j) {
    AlignmentOutcome o;
    for (const auto& pj : j.at("pairs")) {
        AlignedPair p;
        p.ref = {pj.at("ref").at("type").get<std::string>(), pj.at("ref").at("quantity").get<int>(),
                 pj.at("ref").value("gap", false)};
        p.det = {pj.at("det").at("type").get<std::string>(), pj.at("det").at("quantity").get<int>(),
                 pj.at("det").value("gap", false)};
        p.label = pair_label_from_string(pj.at("label").get<std::string>());
        o.pairs.push_back(std::move(p));
    }
    return o;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

struct EvalInput {
    std::string name;
    std::string gt_path;
    std::string detections_path;  // detections.json or report.json
};

json eval_one(const EvalInput& input, double iou_thresh, Metrics* det_total, Metrics* cmp_total) {
    GroundTruth gt = ground_truth_from_json(load_json_file(input.gt_path));
    json run = load_json_file(input.detections_path);

    json result{{"name", input.name}};
    Metrics dm = detection_metrics(detections_from_json(run), gt, iou_thresh);
    result["detection"] = dm;
    det_total->true_positives += dm.true_positives;
    det_total->false_positives += dm.false_positives;
    det_total->false_negatives += dm.false_negatives;

    if (run.contains("alignment") && !gt.labels.empty()) {
        Metrics cm = compliance_metrics(outcome_from_json(run["alignment"]), gt.labels);
        result["compliance"] = cm;
        cmp_total->true_positives += cm.true_positives;
        cmp_total->false_positives += cm.false_positives;
        cmp_total->false_negatives += cm.false_negatives;
    }
    return result;
}

int cmd_eval(const CommonOpts& opts, const std::string& gt_path, const std::string& run_path,
             const std::string& batch_dir) {
    double iou_thresh = opts.iou_thresh.value_or(0.25);
    if (!(iou_thresh > 0.0) || iou_thresh >= 1.0)
        throw std::invalid_argument("--iou-thresh must be in (0, 1)");

    std::vector<EvalInput> inputs;
    if (!batch_dir.empty()) {
        std::vector<fs::path> subdirs;
        for (const auto& e : fs::directory_iterator(batch_dir)) {
            if (e.is_directory()) subdirs.push_back(e.path());
        }
        std::sort(subdirs.begin(), subdirs.end());
        for (const fs::path& dir : subdirs) {
            fs::path gt = dir / "gt.json";
            fs::path run = fs::exists(dir / "report.json") ? dir / "report.json"
                                                           : dir / "detections.json";
            if (fs::exists(gt) && fs::exists(run)) {
                inputs.push_back({dir.filename().string(), gt.string(), run.string()});
            }
        }
        if (inputs.empty()) throw ParseError("no gt.json/report.json pairs under '" + batch_dir + "'");
    } else {
        if (gt_path.empty() || run_path.empty()) {
            throw std::invalid_argument("eval needs --gt and --report/--detections, or --batch");
        }
        inputs.push_back({"shelf", gt_path, run_path});
    }

    Metrics det_total{}, cmp_total{};
    json per_shelf = json::array();
    for (const EvalInput& input : inputs) {
        per_shelf.push_back(eval_one(input, iou_thresh, &det_total, &cmp_total));
    }

    json out{{"iou_threshold", iou_thresh}, {"shelves", per_shelf}};
    std::vector<std::pair<std::string, Metrics>> table;
    Metrics det_agg = make_metrics(det_total.true_positives, det_total.false_positives,
                                   det_total.false_negatives);
    out["aggregate"]["detection"] = det_agg;
    table.emplace_back("detection", det_agg);
    if (cmp_total.true_positives + cmp_total.false_positives + cmp_total.false_negatives > 0) {
        Metrics cmp_agg = make_metrics(cmp_total.true_positives, cmp_total.false_positives,
                                       cmp_total.false_negatives);
        out["aggregate"]["compliance"] = cmp_agg;
        table.emplace_back("compliance", cmp_agg);
    }

    fs::create_directories(opts.out_dir);
    write_json_atomic(fs::path(opts.out_dir) / "metrics.json", out);
    std::cout << render_metrics_table(table);
    return 0;
}

int cmd_synth(const CommonOpts& opts, const std::string& spec_path) {
    json spec_json = load_json_file(spec_path);
    SynthSpec spec = synth_spec_from_json(spec_json);
    if (opts.seed) spec.seed = *opts.seed;

    SynthResult result = synth_shelf(spec);

    fs::path out_dir(opts.out_dir);
    fs::create_directories(out_dir / "models");
    write_png_atomic(result.shelf, out_dir / "shelf.png");
    write_json_atomic(out_dir / "gt.json", json(result.gt));

    json products = json::array();
    for (const PlanogramEntry& e : result.reference.entries) {
        products.push_back({{"id", e.group_type},
                            {"image", "models/" + e.group_type + ".png"},
                            {"quantity", e.quantity}});
    }
    write_json_atomic(out_dir / "planogram.json",
                      json{{"shelf_id", result.reference.shelf_id}, {"products", products}});
    for (const auto& [id, img] : result.model_images) {
        write_png_atomic(img, out_dir / "models" / (id + ".png"));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retail shelf object detection and planogram compliance control"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string gt_path, run_path, batch_dir, spec_path;

    auto add_common = [&opts](CLI::App* cmd, bool pipeline) {
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--config", opts.config_path,
                        "config JSON (falls back to $SHELFALIGN_CONFIG)");
        cmd->add_option("--iou-thresh", opts.iou_thresh, "IoU threshold");
        cmd->add_option("--seed", opts.seed, "override random seed");
        if (pipeline) {
            cmd->add_option("--shelf", opts.shelf_path, "shelf image (PNG/JPEG)")->required();
            cmd->add_option("--planogram", opts.planogram_path, "reference planogram JSON")
                ->required();
            cmd->add_option("--models-dir", opts.models_dir,
                            "directory with <id>.png/.jpg/.shft model files");
            cmd->add_option("--alpha-decay", opts.alpha_decay, "iteration decay factor");
            cmd->add_option("--max-iters", opts.max_iters, "iteration cap");
            cmd->add_option("--sigma", opts.sigma, "vote kernel standard deviation");
            cmd->add_flag("--overlay,!--no-overlay", opts.overlay, "write overlay PNG");
            cmd->add_flag("--dump-votes", opts.dump_votes, "write vote matrices as PNGs");
        }
    };

    CLI::App* detect = app.add_subcommand("detect", "single-pass object detection");
    add_common(detect, true);

    CLI::App* comply = app.add_subcommand("comply", "full compliance control loop");
    add_common(comply, true);

    CLI::App* eval = app.add_subcommand("eval", "detection/compliance metrics against ground truth");
    add_common(eval, false);
    eval->add_option("--gt", gt_path, "ground-truth JSON");
    eval->add_option("--report", run_path, "comply report JSON");
    eval->add_option("--detections", run_path, "detect output JSON");
    eval->add_option("--batch", batch_dir, "directory of per-shelf subdirectories");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic shelf with ground truth");
    add_common(synth, false);
    synth->add_option("--spec", spec_path, "synthesis spec JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (detect->parsed()) return cmd_detect(opts);
        if (comply->parsed()) return cmd_comply(opts);
        if (eval->parsed()) return cmd_eval(opts, gt_path, run_path, batch_dir);
        if (synth->parsed()) return cmd_synth(opts, spec_path);
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
