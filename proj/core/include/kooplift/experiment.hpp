#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kooplift/dataset.hpp"
#include "kooplift/distill.hpp"
#include "kooplift/koopman.hpp"
#include "kooplift/teacher.hpp"

namespace kooplift {

struct DatasetPaths {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::size_t train_limit = 0;  // 0 = use everything
    std::size_t test_limit = 0;
};

enum class Method { kTeacher, kNaive, kNaivePca, kDistill };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Where the teacher comes from: "train" (fresh per seed), "model" (a saved
/// kooplift-teacher file) or "logits" (a kooplift-logits file over the
/// training split; distillation only).
struct TeacherSpec {
    std::string source = "train";
    std::string model_path;
    std::string logits_path;
    MlpArchitecture arch{{784, 20, 20, 20, 20, 20, 10}};
    TrainConfig train;
};

struct ExperimentConfig {
    DatasetPaths data;
    std::vector<Method> methods{Method::kDistill};
    std::size_t pca_dim = 20;
    std::size_t degree = 2;
    bool diagonal_only = false;
    std::vector<std::uint64_t> seeds{1};
    TeacherSpec teacher;
    DistillConfig distill;
    double rcond = kEdmdRcond;
    std::string csv_path;
    std::string json_path;
    std::string model_dir;
};

struct RunResult {
    std::uint64_t seed = 0;
    Method method = Method::kDistill;
    std::size_t pca_dim = 0;
    std::size_t degree = 0;
    std::size_t dict_size = 0;
    std::size_t epochs = 0;
    double accuracy = 0.0;
    std::int64_t wall_ms = 0;
    std::vector<EpochStats> epoch_log;
    std::string error;  // non-empty marks a failed run

    bool ok() const { return error.empty(); }
};

struct MethodSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t count = 0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<RunResult> results;
    std::vector<std::pair<std::string, MethodSummary>> summary;  // method order as configured
    bool partial = false;
    std::string timestamp;
    std::int64_t total_wall_ms = 0;
};

/// Fraction of rows whose argmax matches the label; ties break toward the
/// lowest class index.
double evaluate_accuracy(const DenseMatrix& logits, const LabelSet& labels);
double evaluate_accuracy(const LinearStudent& student, const DenseMatrix& features,
                         const LabelSet& labels);
double evaluate_accuracy(const TeacherMlp& teacher, const DenseMatrix& features,
                         const LabelSet& labels);

ExperimentConfig load_experiment_config(const std::string& path);

/// Multi-seed orchestration: per seed the teacher is produced once and shared
/// by every method (paired comparison); per-method failures are recorded in
/// the result rather than aborting the sweep. Everything except wall-clock
/// fields is deterministic in the seed list.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_csv_string(const ExperimentReport& report);
void write_report_csv(const ExperimentReport& report, const std::string& path);
void write_report_json(const ExperimentReport& report, const std::string& path);

}  // namespace kooplift
