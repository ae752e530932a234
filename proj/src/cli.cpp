/*
 * SPDX-FileCopyrightText: Copyright 2026 The modsca Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "modsca/cli.hpp"

#include "modsca/errors.hpp"
#include "modsca/introspect.hpp"
#include "modsca/network.hpp"
#include "modsca/parallel.hpp"
#include "modsca/report.hpp"
#include "modsca/traces.hpp"
#include "modsca/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace modsca {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct GenFlags {
    std::string preset = "tiny";
    std::string role = "profiling";
    std::optional<std::uint32_t> desync;
    std::optional<std::size_t> count;
    std::optional<double> noise;
    std::optional<unsigned> key;
    std::string leakage = "hw";
    std::uint64_t seed = 0;
    std::string output;
};

struct TrainFlags {
    std::string traces;
    std::string preset_arch = "standard";
    double gamma = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch = 128;
    bool stop = true;
    double lr = 1e-3;
    std::size_t patience = 10;
    double threshold = 0.5;
    double persistence = 0.5;
    std::size_t experiments = 40;
    std::size_t calibration = 1024;
    std::string leakage = "id";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string output;
    // transfer only
    std::string donor;
    std::string lock = "fc";
};

struct AttackFlags {
    std::string encoder;
    std::string classifier;
    std::string traces;
    std::size_t experiments = 40;
    std::size_t max_traces = 0;
    std::optional<unsigned> true_key;
    std::string leakage = "id";
    double threshold = 0.5;
    double persistence = 0.5;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string output;
};

struct InspectFlags {
    std::vector<std::string> classifiers;
    std::string encoder;
    std::string traces;
    std::size_t count = 256;
    std::string leakage = "id";
    std::size_t threads = 1;
    std::string output;
};

LeakageModel leakage_from(const std::string &name) {
    if (name == "id")
        return LeakageModel{LeakageKind::SboxIdentity};
    if (name == "hw")
        return LeakageModel{LeakageKind::SboxHammingWeight};
    return LeakageModel{parse_leakage_kind(name)};
}

TraceRole role_from(const std::string &name) {
    if (name == "profiling")
        return TraceRole::Profiling;
    if (name == "attack")
        return TraceRole::Attack;
    throw ConfigError("unknown trace role \"" + name + "\"");
}

void append_manifest(const fs::path &dir, const json &record) {
    std::ofstream out(dir / "manifest.jsonl", std::ios::app);
    if (!out)
        throw DataError("cannot append to " + (dir / "manifest.jsonl").string());
    out << record.dump() << '\n';
}

void write_plot(const fs::path &csv_path, const std::string &csv, const std::string &title) {
    write_text(csv_path, csv);
    fs::path svg = csv_path;
    svg.replace_extension(".svg");
    write_text(svg, svg_from_csv(csv, title));
}

fs::path prepare_dir(const std::string &dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

json optional_json(const auto &v) { return v ? json(*v) : json(nullptr); }

int cmd_gen(const GenFlags &f, std::ostream &out) {
    if (f.key && *f.key > 255)
        throw ConfigError("--key must be a byte");
    ForgeConfig cfg = forge_preset(f.preset, role_from(f.role));
    cfg.seed = f.seed;
    cfg.model = leakage_from(f.leakage);
    if (f.desync)
        cfg.desync_threshold = *f.desync;
    if (f.count)
        cfg.count = *f.count;
    if (f.noise)
        cfg.noise_sigma = *f.noise;
    if (f.key)
        cfg.key = static_cast<std::uint8_t>(*f.key);

    const fs::path path(f.output);
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    TraceSet set = generate(cfg);
    write_traces(set, path);

    json config{{"preset", f.preset},
                {"role", f.role},
                {"count", cfg.count},
                {"length", cfg.length},
                {"key", cfg.key},
                {"leak_positions", cfg.leak_positions},
                {"amplitude", cfg.amplitude},
                {"noise_sigma", cfg.noise_sigma},
                {"desync", cfg.desync_threshold},
                {"leakage", to_string(cfg.model.kind)},
                {"seed", cfg.seed},
                {"output", f.output}};
    append_manifest(dir, json{{"command", "gen"}, {"config", config}, {"outputs", {path.filename().string()}}});
    out << "wrote " << set.count << " traces of " << set.length << " samples to " << f.output << '\n';
    return kExitOk;
}

json train_config_json(const TrainFlags &f) {
    return json{{"traces", f.traces},
                {"preset_arch", f.preset_arch},
                {"gamma", f.gamma},
                {"omega", 1.0},
                {"epochs", f.epochs},
                {"batch", f.batch},
                {"stop", f.stop},
                {"learning_rate", f.lr},
                {"patience", f.patience},
                {"rank_threshold", f.threshold},
                {"persistence", f.persistence},
                {"experiments", f.experiments},
                {"calibration_traces", f.calibration},
                {"leakage", f.leakage},
                {"seed", f.seed},
                {"threads", f.threads},
                {"output", f.output}};
}

FitConfig fit_config(const TrainFlags &f) {
    FitConfig fc;
    fc.epochs = f.epochs;
    fc.batch_size = f.batch;
    fc.seed = f.seed;
    fc.use_stopper = f.stop;
    fc.policy.rank_threshold = f.threshold;
    fc.policy.persistence = f.persistence;
    fc.policy.patience = f.patience;
    fc.leakage = leakage_from(f.leakage);
    fc.ge.n_experiments = f.experiments;
    fc.ge.seed = f.seed;
    fc.ge.threads = f.threads;
    fc.adam.learning_rate = f.lr;
    fc.calibration_traces = f.calibration;
    return fc;
}

ArchitectureConfig arch_config(const TrainFlags &f, const TraceSet &set) {
    ArchitectureConfig ac;
    ac.preset = parse_architecture_preset(f.preset_arch);
    ac.extra_block = set.length == 2 * ac.trace_len;
    ac.trace_len = set.length;
    ac.classes = leakage_from(f.leakage).class_count();
    return ac;
}

json report_json(const TrainingReport &r) {
    return json{{"epochs_run", r.epochs.size()},
                {"stopped_epoch", r.stopped_epoch},
                {"early_stopped", r.early_stopped},
                {"best_epoch", optional_json(r.best_epoch)},
                {"steps", r.steps}};
}

std::vector<std::string> write_training(const ModularNetwork &net, const TrainingReport &report,
                                        const fs::path &dir) {
    save_module(net.encoder(), dir / "encoder.scmd");
    save_module(net.decoder(), dir / "decoder.scmd");
    save_module(net.classifier(), dir / "classifier.scmd");
    write_plot(dir / "training.csv", training_csv(report), "training loss");
    std::vector<std::string> files{"encoder.scmd", "decoder.scmd", "classifier.scmd",
                                   "training.csv", "training.svg"};
    if (report.best_epoch) {
        for (const EpochRecord &rec : report.epochs)
            if (rec.epoch == *report.best_epoch && rec.ge) {
                write_plot(dir / "validation_ge.csv", ge_csv(*rec.ge), "validation GE");
                files.push_back("validation_ge.csv");
                files.push_back("validation_ge.svg");
            }
    }
    return files;
}

void print_report(std::ostream &out, const TrainingReport &r) {
    out << "epochs " << r.epochs.size() << " stopped_epoch " << r.stopped_epoch
        << " early_stopped " << (r.early_stopped ? "yes" : "no");
    if (r.best_epoch)
        out << " best_epoch " << *r.best_epoch;
    out << '\n';
}

int cmd_train(const TrainFlags &f, bool transfer, std::ostream &out) {
    TraceSet set = read_traces(f.traces);
    ModularNetwork net = build_network(arch_config(f, set), f.gamma, f.seed);
    json config = train_config_json(f);
    if (transfer) {
        const SharingProtocol protocol = parse_sharing_protocol(f.lock);
        ModuleGraph donor = load_module(f.donor);
        net = swap_classifier(net, donor, protocol);
        config["donor_classifier"] = f.donor;
        config["lock"] = to_string(protocol);
    }
    const fs::path dir = prepare_dir(f.output);
    TrainingReport report = fit(net, set, fit_config(f));
    auto files = write_training(net, report, dir);
    append_manifest(dir, json{{"command", transfer ? "transfer" : "train"},
                              {"config", config},
                              {"outputs", files},
                              {"result", report_json(report)}});
    print_report(out, report);
    return kExitOk;
}

int cmd_attack(const AttackFlags &f, std::ostream &out, std::ostream &err) {
    TraceSet set = read_traces(f.traces);
    std::optional<unsigned> key = f.true_key;
    if (!key && set.key)
        key = *set.key;
    if (!key) {
        err << "error: no true key: pass --true-key or use a container that stores one\n";
        return kExitUsage;
    }
    if (*key > 255)
        throw ConfigError("--true-key must be a byte");
    auto encoder = std::make_shared<const ModuleGraph>(load_module(f.encoder));
    auto classifier = std::make_shared<const ModuleGraph>(load_module(f.classifier));
    if (encoder->kind() != ModuleKind::Encoder || classifier->kind() != ModuleKind::Classifier)
        throw StructureError("attack expects an encoder and a classifier module");
    TruncatedModel model(encoder, classifier);
    const LeakageModel leakage = leakage_from(f.leakage);
    if (classifier->output_len() != leakage.class_count())
        throw DimensionError("classifier emits " + std::to_string(classifier->output_len()) +
                             " classes, leakage model has " +
                             std::to_string(leakage.class_count()));

    GeConfig g;
    g.n_experiments = f.experiments;
    g.seed = f.seed;
    g.threads = f.threads;
    g.max_traces = f.max_traces;
    const Tensor<float> probs = model.predict(set.as_tensor(), f.threads);
    const GEVector ge = guessing_entropy(probs, set.plaintexts, static_cast<std::uint8_t>(*key),
                                         leakage, g);
    const auto conv = converged_at(ge, f.threshold, f.persistence);

    const fs::path dir = prepare_dir(f.output);
    write_plot(dir / "ge.csv", ge_csv(ge), "guessing entropy");
    json config{{"encoder", f.encoder},
                {"classifier", f.classifier},
                {"traces", f.traces},
                {"experiments", f.experiments},
                {"max_traces", f.max_traces},
                {"true_key", *key},
                {"leakage", f.leakage},
                {"rank_threshold", f.threshold},
                {"persistence", f.persistence},
                {"seed", f.seed},
                {"threads", f.threads},
                {"output", f.output}};
    append_manifest(dir, json{{"command", "attack"},
                              {"config", config},
                              {"outputs", {"ge.csv", "ge.svg"}},
                              {"result", {{"final_rank", ge.final_rank()},
                                          {"converged_at", optional_json(conv)}}}});
    out << "final_rank " << format_number(ge.final_rank()) << " converged_at "
        << (conv ? std::to_string(*conv) : std::string("none")) << '\n';
    return kExitOk;
}

struct Inspection {
    Heatmap heatmap;
    std::vector<double> saliency;
};

int cmd_inspect(const InspectFlags &f, std::ostream &out) {
    TraceSet set = read_traces(f.traces);
    if (!set.key)
        throw DataError("inspect needs a container with a stored key for the labels");
    set = set.slice(0, std::min(f.count, set.count));
    const LeakageModel leakage = leakage_from(f.leakage);
    const auto labels = set.labels(leakage);

    std::vector<ModuleGraph> models;
    for (const auto &path : f.classifiers) {
        models.push_back(load_module(path));
        if (models.back().kind() != ModuleKind::Classifier)
            throw StructureError(path + " is not a classifier module");
    }
    Tensor<float> latents = set.as_tensor();
    if (!f.encoder.empty()) {
        ModuleGraph encoder = load_module(f.encoder);
        if (encoder.kind() != ModuleKind::Encoder)
            throw StructureError(f.encoder + " is not an encoder module");
        latents = encoder.predict(latents);
    }
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i].input_len() != latents.dim(1))
            throw LatentDimError(f.classifiers[i] + " expects inputs of " +
                                 std::to_string(models[i].input_len()) + ", got " +
                                 std::to_string(latents.dim(1)));

    std::vector<std::string> names;
    for (const auto &path : f.classifiers) {
        std::string name = fs::path(path).stem().string();
        std::string unique = name;
        for (int n = 2; std::find(names.begin(), names.end(), unique) != names.end(); ++n)
            unique = name + "_" + std::to_string(n);
        names.push_back(unique);
    }

    std::vector<Inspection> results(models.size());
    parallel_for(models.size(), f.threads, [&](std::size_t i) {
        results[i].heatmap = activation_heatmap(models[i], latents);
        results[i].saliency = saliency(models[i], latents, labels);
    });

    const std::size_t n = models.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i * n + j] = dist[j * n + i] =
                dtw_distance(results[i].saliency, results[j].saliency);

    const fs::path dir = prepare_dir(f.output);
    std::vector<std::string> files;
    for (std::size_t i = 0; i < n; ++i) {
        write_text(dir / ("heatmap_" + names[i] + ".csv"), heatmap_csv(results[i].heatmap));
        write_plot(dir / ("saliency_" + names[i] + ".csv"), saliency_csv(results[i].saliency),
                   "saliency " + names[i]);
        files.push_back("heatmap_" + names[i] + ".csv");
        files.push_back("saliency_" + names[i] + ".csv");
        files.push_back("saliency_" + names[i] + ".svg");
    }
    write_text(dir / "dtw.csv", distance_matrix_csv(names, dist));
    files.push_back("dtw.csv");

    json config{{"classifiers", f.classifiers},
                {"encoder", f.encoder},
                {"traces", f.traces},
                {"count", set.count},
                {"leakage", f.leakage},
                {"threads", f.threads},
                {"output", f.output}};
    append_manifest(dir, json{{"command", "inspect"}, {"config", config}, {"outputs", files}});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out << "dtw " << names[i] << ' ' << names[j] << ' '
                << format_number(dist[i * n + j]) << '\n';
    return kExitOk;
}

void add_train_options(CLI::App *cmd, TrainFlags &f) {
    cmd->add_option("--traces", f.traces, "profiling trace container")->required();
    cmd->add_option("--preset-arch", f.preset_arch, "standard or compact");
    cmd->add_option("--gamma", f.gamma, "CE weight in (0, 1]");
    cmd->add_option("--epochs", f.epochs);
    cmd->add_option("--batch", f.batch);
    cmd->add_flag("--stop,!--no-stop", f.stop, "GE-based early stopping");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--patience", f.patience);
    cmd->add_option("--rank-threshold", f.threshold);
    cmd->add_option("--persistence", f.persistence);
    cmd->add_option("--experiments", f.experiments, "GE experiments per evaluation");
    cmd->add_option("--calibration", f.calibration, "traces used to refresh BatchNorm stats");
    cmd->add_option("--leakage", f.leakage, "id or hw");
    cmd->add_option("--seed", f.seed);
    cmd->add_option("--threads", f.threads)->check(CLI::PositiveNumber);
    cmd->add_option("-o,--output", f.output, "model directory")->required();
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"modular networks for profiled side-channel attacks", "modsca"};
    app.require_subcommand(1);

    GenFlags gen;
    auto *g = app.add_subcommand("gen", "generate a synthetic trace container");
    g->add_option("--preset", gen.preset, "tiny, ascad_f_like or ascad_r_like");
    g->add_option("--role", gen.role, "profiling or attack");
    g->add_option("--desync", gen.desync, "maximum shift in samples");
    g->add_option("--count", gen.count, "number of traces");
    g->add_option("--noise", gen.noise, "Gaussian noise sigma");
    g->add_option("--key", gen.key, "key byte");
    g->add_option("--leakage", gen.leakage, "hw or id");
    g->add_option("--seed", gen.seed);
    g->add_option("-o,--output", gen.output, "output .sctr file")->required();

    TrainFlags train;
    add_train_options(app.add_subcommand("train", "train a modular network"), train);

    TrainFlags transfer;
    auto *t = app.add_subcommand("transfer", "train with a donor classifier");
    add_train_options(t, transfer);
    t->add_option("--donor-classifier", transfer.donor, "donor classifier .scmd")->required();
    t->add_option("--lock", transfer.lock, "none, conv, fc or both");

    AttackFlags attack;
    auto *a = app.add_subcommand("attack", "guessing entropy of a trained model");
    a->add_option("--encoder", attack.encoder)->required();
    a->add_option("--classifier", attack.classifier)->required();
    a->add_option("--traces", attack.traces, "attack trace container")->required();
    a->add_option("--experiments", attack.experiments);
    a->add_option("--max-traces", attack.max_traces);
    a->add_option("--true-key", attack.true_key, "overrides the stored key");
    a->add_option("--leakage", attack.leakage, "id or hw");
    a->add_option("--rank-threshold", attack.threshold);
    a->add_option("--persistence", attack.persistence);
    a->add_option("--seed", attack.seed);
    a->add_option("--threads", attack.threads)->check(CLI::PositiveNumber);
    a->add_option("-o,--output", attack.output, "output directory")->required();

    InspectFlags inspect;
    auto *in = app.add_subcommand("inspect", "compare classifier modules");
    in->add_option("--classifier", inspect.classifiers, "classifier .scmd (repeatable)")
        ->required();
    in->add_option("--encoder", inspect.encoder, "encoder producing the latents");
    in->add_option("--traces", inspect.traces)->required();
    in->add_option("--count", inspect.count, "traces to analyse");
    in->add_option("--leakage", inspect.leakage, "id or hw");
    in->add_option("--threads", inspect.threads)->check(CLI::PositiveNumber);
    in->add_option("-o,--output", inspect.output, "output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (g->parsed())
            return cmd_gen(gen, out);
        if (app.got_subcommand("train"))
            return cmd_train(train, false, out);
        if (t->parsed())
            return cmd_train(transfer, true, out);
        if (a->parsed())
            return cmd_attack(attack, out, err);
        return cmd_inspect(inspect, out);
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const LatentDimError &e) {
        err << "incompatible modules: " << e.what() << '\n';
        return kExitCompat;
    } catch (const StructureError &e) {
        err << "incompatible modules: " << e.what() << '\n';
        return kExitCompat;
    } catch (const DimensionError &e) {
        err << "incompatible shapes: " << e.what() << '\n';
        return kExitCompat;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace modsca
