#include "kooplift/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "kooplift/model_io.hpp"
#include "kooplift/preprocess.hpp"

namespace kooplift {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json epoch_log_to_json(const std::vector<EpochStats>& log) {
    json arr = json::array();
    for (const auto& e : log)
        arr.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"accuracy", e.accuracy}});
    return arr;
}

json config_to_json(const ExperimentConfig& c) {
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(method_name(m));
    return json{
        {"dataset",
         {{"train_images", c.data.train_images},
          {"train_labels", c.data.train_labels},
          {"test_images", c.data.test_images},
          {"test_labels", c.data.test_labels},
          {"train_limit", c.data.train_limit},
          {"test_limit", c.data.test_limit}}},
        {"methods", methods},
        {"pca_dim", c.pca_dim},
        {"degree", c.degree},
        {"diagonal_only", c.diagonal_only},
        {"seeds", c.seeds},
        {"rcond", c.rcond},
        {"teacher",
         {{"source", c.teacher.source},
          {"model", c.teacher.model_path},
          {"logits", c.teacher.logits_path},
          {"layer_sizes", c.teacher.arch.layer_sizes},
          {"first_hidden_linear", c.teacher.arch.first_hidden_linear},
          {"output_linear", c.teacher.arch.output_linear},
          {"use_bias", c.teacher.arch.use_bias},
          {"epochs", c.teacher.train.epochs},
          {"batch_size", c.teacher.train.batch_size},
          {"rho", c.teacher.train.rho},
          {"epsilon", c.teacher.train.epsilon},
          {"weight_decay", c.teacher.train.weight_decay},
          {"lr", c.teacher.train.lr},
          {"lr_decay", c.teacher.train.lr_decay}}},
        {"distill",
         {{"alpha", c.distill.alpha},
          {"temperature", c.distill.temperature},
          {"epochs", c.distill.epochs},
          {"batch_size", c.distill.batch_size},
          {"rho", c.distill.rho},
          {"epsilon", c.distill.epsilon},
          {"weight_decay", c.distill.weight_decay},
          {"apply_weight_decay", c.distill.apply_weight_decay},
          {"lr", c.distill.lr},
          {"lr_decay", c.distill.lr_decay}}},
        {"out", {{"csv", c.csv_path}, {"json", c.json_path}, {"model_dir", c.model_dir}}}};
}

bool has_method(const ExperimentConfig& c, Method m) {
    return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::kTeacher: return "teacher";
        case Method::kNaive: return "naive";
        case Method::kNaivePca: return "naive-pca";
        case Method::kDistill: return "distill";
    }
    throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "teacher") return Method::kTeacher;
    if (name == "naive") return Method::kNaive;
    if (name == "naive-pca") return Method::kNaivePca;
    if (name == "distill") return Method::kDistill;
    throw std::invalid_argument("unknown method: " + name +
                                " (expected teacher|naive|naive-pca|distill)");
}

double evaluate_accuracy(const DenseMatrix& logits, const LabelSet& labels) {
    if (logits.rows != labels.count)
        throw std::invalid_argument("evaluate_accuracy: row/label count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        std::size_t arg = 0;
        double best = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j)
            if (logits(i, j) > best) {  // strict: ties keep the lowest index
                best = logits(i, j);
                arg = j;
            }
        if (arg == labels.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

double evaluate_accuracy(const LinearStudent& student, const DenseMatrix& features,
                         const LabelSet& labels) {
    return evaluate_accuracy(student_logits(student, features), labels);
}

double evaluate_accuracy(const TeacherMlp& teacher, const DenseMatrix& features,
                         const LabelSet& labels) {
    return evaluate_accuracy(forward_logits(teacher, features), labels);
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed config JSON in " + path + ": " + e.what());
    }

    ExperimentConfig c;
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        c.data.train_images = d.value("train_images", "");
        c.data.train_labels = d.value("train_labels", "");
        c.data.test_images = d.value("test_images", "");
        c.data.test_labels = d.value("test_labels", "");
        c.data.train_limit = d.value("train_limit", std::size_t{0});
        c.data.test_limit = d.value("test_limit", std::size_t{0});
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j["methods"]) c.methods.push_back(method_from_name(m.get<std::string>()));
    } else if (j.contains("method")) {
        c.methods = {method_from_name(j["method"].get<std::string>())};
    }
    c.pca_dim = j.value("pca_dim", c.pca_dim);
    c.degree = j.value("degree", c.degree);
    c.diagonal_only = j.value("diagonal_only", c.diagonal_only);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("seed")) c.seeds = {j["seed"].get<std::uint64_t>()};
    c.rcond = j.value("rcond", c.rcond);
    if (j.contains("teacher")) {
        const json& t = j["teacher"];
        c.teacher.source = t.value("source", c.teacher.source);
        c.teacher.model_path = t.value("model", c.teacher.model_path);
        c.teacher.logits_path = t.value("logits", c.teacher.logits_path);
        if (t.contains("layer_sizes"))
            c.teacher.arch.layer_sizes = t["layer_sizes"].get<std::vector<std::size_t>>();
        c.teacher.arch.first_hidden_linear =
            t.value("first_hidden_linear", c.teacher.arch.first_hidden_linear);
        c.teacher.arch.output_linear = t.value("output_linear", c.teacher.arch.output_linear);
        c.teacher.arch.use_bias = t.value("use_bias", c.teacher.arch.use_bias);
        c.teacher.train.epochs = t.value("epochs", c.teacher.train.epochs);
        c.teacher.train.batch_size = t.value("batch_size", c.teacher.train.batch_size);
        c.teacher.train.rho = t.value("rho", c.teacher.train.rho);
        c.teacher.train.epsilon = t.value("epsilon", c.teacher.train.epsilon);
        c.teacher.train.weight_decay = t.value("weight_decay", c.teacher.train.weight_decay);
        c.teacher.train.lr = t.value("lr", c.teacher.train.lr);
        c.teacher.train.lr_decay = t.value("lr_decay", c.teacher.train.lr_decay);
    }
    if (j.contains("distill")) {
        const json& d = j["distill"];
        c.distill.alpha = d.value("alpha", c.distill.alpha);
        c.distill.temperature = d.value("temperature", c.distill.temperature);
        c.distill.epochs = d.value("epochs", c.distill.epochs);
        c.distill.batch_size = d.value("batch_size", c.distill.batch_size);
        c.distill.rho = d.value("rho", c.distill.rho);
        c.distill.epsilon = d.value("epsilon", c.distill.epsilon);
        c.distill.weight_decay = d.value("weight_decay", c.distill.weight_decay);
        c.distill.apply_weight_decay = d.value("apply_weight_decay", c.distill.apply_weight_decay);
        c.distill.lr = d.value("lr", c.distill.lr);
        c.distill.lr_decay = d.value("lr_decay", c.distill.lr_decay);
    }
    if (j.contains("out")) {
        const json& o = j["out"];
        c.csv_path = o.value("csv", "");
        c.json_path = o.value("json", "");
        c.model_dir = o.value("model_dir", "");
    }
    return c;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    const auto total_t0 = Clock::now();
    if (config.seeds.empty()) throw std::invalid_argument("run_experiment: seeds must be non-empty");
    if (config.methods.empty()) throw std::invalid_argument("run_experiment: no methods selected");

    ExperimentReport report;
    report.config = config;
    report.timestamp = utc_timestamp();
    if (!config.model_dir.empty()) std::filesystem::create_directories(config.model_dir);

    // data
    ImageSet train_images = load_idx_images(config.data.train_images);
    LabelSet train_labels = load_idx_labels(config.data.train_labels);
    ImageSet test_images = load_idx_images(config.data.test_images);
    LabelSet test_labels = load_idx_labels(config.data.test_labels);
    DenseMatrix x_train = to_features(train_images);
    DenseMatrix x_test = to_features(test_images);
    if (config.data.train_limit > 0) {
        x_train = head_rows(x_train, config.data.train_limit);
        train_labels = head_labels(train_labels, config.data.train_limit);
    }
    if (config.data.test_limit > 0) {
        x_test = head_rows(x_test, config.data.test_limit);
        test_labels = head_labels(test_labels, config.data.test_limit);
    }
    if (x_train.rows != train_labels.count || x_test.rows != test_labels.count)
        throw std::runtime_error("run_experiment: image/label counts disagree");

    const bool want_teacher_weights = has_method(config, Method::kTeacher) ||
                                      has_method(config, Method::kNaive) ||
                                      (has_method(config, Method::kDistill) &&
                                       config.teacher.source != "logits");
    if (want_teacher_weights && config.teacher.source == "logits")
        throw std::runtime_error(
            "run_experiment: methods requiring teacher weights are incompatible with "
            "teacher.source=logits");

    std::size_t classes = 0;
    for (std::size_t i = 0; i < train_labels.count; ++i)
        classes = std::max<std::size_t>(classes, train_labels.labels[i] + 1);
    if (config.teacher.source != "logits" && config.teacher.arch.output_size() < classes)
        throw std::runtime_error("run_experiment: teacher output narrower than label range");
    if (config.teacher.source != "logits") classes = config.teacher.arch.output_size();

    // Preprocessing is deterministic and seed-independent, and is fitted on
    // the training split only; fit it once and share it across seeds. A
    // failure here is recorded on every run that depends on it.
    const bool need_pca = has_method(config, Method::kNaivePca) || has_method(config, Method::kDistill);
    PcaModel pca;
    Scaler scaler;
    Dictionary dict_pca;
    DenseMatrix y_train_onehot;
    std::string pca_error;
    if (need_pca) {
        try {
            pca = fit_pca(x_train, config.pca_dim);
            scaler = fit_scaler(pca_transform(pca, x_train));
            dict_pca = build_dictionary(config.pca_dim, config.degree, config.diagonal_only);
        } catch (const std::exception& e) {
            pca_error = e.what();
        }
    }
    if (has_method(config, Method::kNaivePca)) y_train_onehot = one_hot(train_labels, classes);

    // Teacher from a fixed file is seed-independent; load it once.
    TeacherMlp file_teacher;
    bool file_teacher_loaded = false;
    if (config.teacher.source == "model") {
        file_teacher = load_teacher(config.teacher.model_path);
        file_teacher_loaded = true;
    }
    DenseMatrix file_logits;
    if (config.teacher.source == "logits") {
        LogitsFile lf = import_logits(config.teacher.logits_path);
        if (lf.count != x_train.rows)
            throw std::runtime_error("run_experiment: logits file count does not match training set");
        file_logits = std::move(lf.logits);
    }

    for (const std::uint64_t seed : config.seeds) {
        // one teacher per seed, shared by all methods
        TeacherMlp teacher;
        std::vector<EpochStats> teacher_log;
        bool teacher_ready = false;
        std::string teacher_error;
        std::int64_t teacher_train_ms = 0;
        if (want_teacher_weights) {
            const auto teach_t0 = Clock::now();
            try {
                if (config.teacher.source == "train") {
                    teacher = init_mlp(config.teacher.arch, seed);
                    TrainConfig tc = config.teacher.train;
                    tc.seed = seed;
                    teacher_log = train_teacher(teacher, x_train, train_labels, tc);
                } else {
                    teacher = file_teacher;
                    if (!file_teacher_loaded) throw std::runtime_error("teacher model not loaded");
                }
                teacher_ready = true;
                if (!config.model_dir.empty() && config.teacher.source == "train") {
                    char name[64];
                    std::snprintf(name, sizeof(name), "/teacher_seed%llu.json",
                                  static_cast<unsigned long long>(seed));
                    save_teacher(teacher, config.model_dir + name);
                }
            } catch (const std::exception& e) {
                teacher_error = e.what();
            }
            teacher_train_ms = ms_since(teach_t0);
        }

        // teacher logits over the training split, cached per seed
        DenseMatrix train_logits;
        bool train_logits_ready = false;
        auto ensure_train_logits = [&]() -> const DenseMatrix& {
            if (!train_logits_ready) {
                if (config.teacher.source == "logits") {
                    train_logits = file_logits;
                } else {
                    train_logits = forward_logits(teacher, x_train);
                }
                train_logits_ready = true;
            }
            return train_logits;
        };

        for (const Method method : config.methods) {
            RunResult r;
            r.seed = seed;
            r.method = method;
            r.degree = config.degree;
            const auto t0 = Clock::now();
            try {
                const bool needs_teacher = method == Method::kTeacher || method == Method::kNaive ||
                                           (method == Method::kDistill &&
                                            config.teacher.source != "logits");
                if (needs_teacher && !teacher_ready) throw std::runtime_error(teacher_error);
                const bool needs_pca = method == Method::kNaivePca || method == Method::kDistill;
                if (needs_pca && !pca_error.empty()) throw std::runtime_error(pca_error);

                switch (method) {
                    case Method::kTeacher: {
                        r.degree = 0;
                        r.epochs = config.teacher.source == "train" ? config.teacher.train.epochs : 0;
                        r.epoch_log = teacher_log;
                        r.accuracy = evaluate_accuracy(teacher, x_test, test_labels);
                        break;
                    }
                    case Method::kNaive: {
                        const Dictionary dict_hidden = build_dictionary(
                            teacher.arch.layer_sizes[1], config.degree, config.diagonal_only);
                        LinearStudent student =
                            naive_pipeline(teacher, x_train, dict_hidden, config.rcond);
                        r.dict_size = dict_hidden.size();
                        r.accuracy = evaluate_accuracy(student, x_test, test_labels);
                        if (!config.model_dir.empty()) {
                            char name[64];
                            std::snprintf(name, sizeof(name), "/naive_seed%llu.json",
                                          static_cast<unsigned long long>(seed));
                            save_student(student, config.model_dir + name);
                        }
                        break;
                    }
                    case Method::kNaivePca: {
                        LinearStudent student = naive_pca_pipeline(x_train, y_train_onehot, pca,
                                                                   scaler, dict_pca, config.rcond);
                        r.pca_dim = config.pca_dim;
                        r.dict_size = dict_pca.size();
                        r.accuracy = evaluate_accuracy(student, x_test, test_labels);
                        if (!config.model_dir.empty()) {
                            char name[64];
                            std::snprintf(name, sizeof(name), "/naive-pca_seed%llu.json",
                                          static_cast<unsigned long long>(seed));
                            save_student(student, config.model_dir + name);
                        }
                        break;
                    }
                    case Method::kDistill: {
                        DistillConfig dc = config.distill;
                        dc.seed = seed;
                        DistillResult res = train_student(x_train, train_labels,
                                                          ensure_train_logits(), pca, scaler,
                                                          dict_pca, dc);
                        r.pca_dim = config.pca_dim;
                        r.dict_size = dict_pca.size();
                        r.epochs = dc.epochs;
                        r.epoch_log = std::move(res.log);
                        r.accuracy = evaluate_accuracy(res.student, x_test, test_labels);
                        if (!config.model_dir.empty()) {
                            char name[64];
                            std::snprintf(name, sizeof(name), "/distill_seed%llu.json",
                                          static_cast<unsigned long long>(seed));
                            save_student(res.student, config.model_dir + name);
                        }
                        break;
                    }
                }
            } catch (const std::exception& e) {
                r.error = e.what();
                report.partial = true;
            }
            r.wall_ms = ms_since(t0);
            // the shared training stage belongs to the teacher's own row
            if (method == Method::kTeacher) r.wall_ms += teacher_train_ms;
            report.results.push_back(std::move(r));
        }
    }

    // per-method aggregates over successful runs
    for (const Method method : config.methods) {
        MethodSummary s;
        std::vector<double> accs;
        for (const auto& r : report.results)
            if (r.method == method && r.ok()) accs.push_back(r.accuracy);
        s.count = accs.size();
        if (!accs.empty()) {
            for (double a : accs) s.mean += a;
            s.mean /= static_cast<double>(accs.size());
            for (double a : accs) s.stddev += (a - s.mean) * (a - s.mean);
            s.stddev = std::sqrt(s.stddev / static_cast<double>(accs.size()));
        }
        report.summary.emplace_back(method_name(method), s);
    }

    report.total_wall_ms = ms_since(total_t0);
    if (!config.csv_path.empty()) write_report_csv(report, config.csv_path);
    if (!config.json_path.empty()) write_report_json(report, config.json_path);
    return report;
}

std::string report_csv_string(const ExperimentReport& report) {
    std::string out = "seed,method,pca_dim,degree,dict_size,accuracy,epochs,wall_ms\n";
    char line[192];
    for (const auto& r : report.results) {
        if (!r.ok()) continue;
        std::snprintf(line, sizeof(line), "%llu,%s,%zu,%zu,%zu,%.6f,%zu,%lld\n",
                      static_cast<unsigned long long>(r.seed), method_name(r.method).c_str(),
                      r.pca_dim, r.degree, r.dict_size, r.accuracy, r.epochs,
                      static_cast<long long>(r.wall_ms));
        out += line;
    }
    return out;
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << report_csv_string(report);
}

void write_report_json(const ExperimentReport& report, const std::string& path) {
    json results = json::array();
    for (const auto& r : report.results) {
        json jr{{"seed", r.seed},
                {"method", method_name(r.method)},
                {"pca_dim", r.pca_dim},
                {"degree", r.degree},
                {"dict_size", r.dict_size},
                {"accuracy", r.accuracy},
                {"epochs", r.epochs},
                {"wall_ms", r.wall_ms},
                {"epoch_log", epoch_log_to_json(r.epoch_log)}};
        if (!r.ok()) jr["error"] = r.error;
        results.push_back(std::move(jr));
    }
    json summary = json::object();
    for (const auto& [name, s] : report.summary)
        summary[name] = {{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
    const json j{{"format", "kooplift-report"},
                 {"version", 1},
                 {"config", config_to_json(report.config)},
                 {"results", results},
                 {"summary", summary},
                 {"partial", report.partial},
                 {"meta", {{"timestamp", report.timestamp}, {"total_wall_ms", report.total_wall_ms}}}};
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(1) << '\n';
}

}  // namespace kooplift
