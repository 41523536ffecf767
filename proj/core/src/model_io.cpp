#include "kooplift/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace kooplift {

namespace {

using nlohmann::json;

json matrix_to_json(const DenseMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

DenseMatrix matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw std::runtime_error("model file: malformed matrix");
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto& row = rows[i];
        if (row.size() != m.cols) throw std::runtime_error("model file: ragged matrix rows");
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = row[j].get<double>();
    }
    return m;
}

json flat_matrix_to_json(const DenseMatrix& m) {
    json arr = json::array();
    for (double v : m.data) arr.push_back(v);
    return arr;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void dump_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(1) << '\n';
}

void expect_format(const json& j, const std::string& format, const std::string& path) {
    if (!j.contains("format") || j["format"] != format)
        throw std::runtime_error(path + ": not a " + format + " file");
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::runtime_error(path + ": unsupported version");
}

json pca_to_json(const PcaModel& pca) {
    return json{{"dim", pca.dim},
                {"input_mean", pca.input_mean},
                {"explained_ratio", pca.explained_ratio},
                {"components", matrix_to_json(pca.u)}};
}

PcaModel pca_from_json(const json& j) {
    PcaModel pca;
    pca.dim = j.at("dim").get<std::size_t>();
    pca.input_mean = j.at("input_mean").get<std::vector<double>>();
    pca.explained_ratio = j.at("explained_ratio").get<std::vector<double>>();
    pca.u = matrix_from_json(j.at("components"));
    return pca;
}

}  // namespace

void save_teacher(const TeacherMlp& mlp, const std::string& path) {
    json j;
    j["format"] = "kooplift-teacher";
    j["version"] = 1;
    j["architecture"] = {{"layer_sizes", mlp.arch.layer_sizes},
                         {"first_hidden_linear", mlp.arch.first_hidden_linear},
                         {"output_linear", mlp.arch.output_linear},
                         {"use_bias", mlp.arch.use_bias}};
    json weights = json::array();
    for (const auto& w : mlp.weights) weights.push_back(matrix_to_json(w));
    j["weights"] = std::move(weights);
    if (mlp.arch.use_bias) j["biases"] = mlp.biases;
    dump_json(j, path);
}

TeacherMlp load_teacher(const std::string& path) {
    const json j = load_json(path);
    expect_format(j, "kooplift-teacher", path);
    TeacherMlp mlp;
    const json& arch = j.at("architecture");
    mlp.arch.layer_sizes = arch.at("layer_sizes").get<std::vector<std::size_t>>();
    mlp.arch.first_hidden_linear = arch.at("first_hidden_linear").get<bool>();
    mlp.arch.output_linear = arch.at("output_linear").get<bool>();
    mlp.arch.use_bias = arch.at("use_bias").get<bool>();
    mlp.arch.validate();
    for (const auto& w : j.at("weights")) mlp.weights.push_back(matrix_from_json(w));
    if (mlp.arch.use_bias) mlp.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (mlp.weights.size() != mlp.arch.num_weight_layers())
        throw std::runtime_error(path + ": weight layer count does not match architecture");
    for (std::size_t l = 0; l < mlp.weights.size(); ++l)
        if (mlp.weights[l].rows != mlp.arch.layer_sizes[l] ||
            mlp.weights[l].cols != mlp.arch.layer_sizes[l + 1])
            throw std::runtime_error(path + ": weight shape does not chain between layers");
    return mlp;
}

void save_student(const LinearStudent& student, const std::string& path) {
    json j;
    j["format"] = "kooplift-student";
    j["version"] = 1;
    j["pca"] = student.pca ? pca_to_json(*student.pca) : json(nullptr);
    j["scaler"] = student.scaler
                      ? json{{"mu", student.scaler->mu},
                             {"sigma", student.scaler->sigma},
                             {"epsilon", student.scaler->epsilon}}
                      : json(nullptr);
    j["input_map"] = student.input_map
                         ? json{{"weight", matrix_to_json(student.input_map->weight)},
                                {"bias", student.input_map->bias},
                                {"relu", student.input_map->relu}}
                         : json(nullptr);
    j["dictionary"] = {{"input_dim", student.dict.input_dim},
                       {"max_degree", student.dict.max_degree},
                       {"diagonal_only", student.dict.diagonal_only}};
    j["k"] = matrix_to_json(student.k);
    dump_json(j, path);
}

LinearStudent load_student(const std::string& path) {
    const json j = load_json(path);
    expect_format(j, "kooplift-student", path);
    LinearStudent s;
    if (!j.at("pca").is_null()) s.pca = pca_from_json(j["pca"]);
    if (!j.at("scaler").is_null()) {
        Scaler sc;
        sc.mu = j["scaler"].at("mu").get<std::vector<double>>();
        sc.sigma = j["scaler"].at("sigma").get<std::vector<double>>();
        sc.epsilon = j["scaler"].at("epsilon").get<double>();
        s.scaler = std::move(sc);
    }
    if (!j.at("input_map").is_null()) {
        AffineMap am;
        am.weight = matrix_from_json(j["input_map"].at("weight"));
        am.bias = j["input_map"].at("bias").get<std::vector<double>>();
        am.relu = j["input_map"].at("relu").get<bool>();
        s.input_map = std::move(am);
    }
    const json& d = j.at("dictionary");
    s.dict = build_dictionary(d.at("input_dim").get<std::size_t>(),
                              d.at("max_degree").get<std::size_t>(),
                              d.at("diagonal_only").get<bool>());
    s.k = matrix_from_json(j.at("k"));
    if (s.k.rows != s.dict.size())
        throw std::runtime_error(path + ": K row count does not match dictionary size");
    return s;
}

void write_logits(const LogitsFile& file, const std::string& path) {
    if (file.logits.rows != file.count || file.logits.cols != file.classes)
        throw std::invalid_argument("write_logits: inconsistent shape");
    if (!file.logits.all_finite()) throw std::invalid_argument("write_logits: non-finite logits");
    json j;
    j["format"] = "kooplift-logits";
    j["version"] = 1;
    j["count"] = file.count;
    j["classes"] = file.classes;
    j["provenance"] = file.provenance;
    j["logits"] = flat_matrix_to_json(file.logits);  // row-major
    dump_json(j, path);
}

LogitsFile import_logits(const std::string& path) {
    const json j = load_json(path);
    expect_format(j, "kooplift-logits", path);
    LogitsFile f;
    f.count = j.at("count").get<std::size_t>();
    f.classes = j.at("classes").get<std::size_t>();
    f.provenance = j.at("provenance").get<std::string>();
    const auto& arr = j.at("logits");
    if (arr.size() != f.count * f.classes)
        throw std::runtime_error(path + ": logits array length does not match count * classes");
    f.logits = DenseMatrix(f.count, f.classes);
    for (std::size_t i = 0; i < f.logits.data.size(); ++i) f.logits.data[i] = arr[i].get<double>();
    if (!f.logits.all_finite()) throw std::runtime_error(path + ": non-finite logits");
    return f;
}

void export_logits(const TeacherMlp& mlp, const DenseMatrix& x, const std::string& path,
                   const std::string& provenance) {
    write_logits(make_logits_file(mlp, x, provenance), path);
}

std::string peek_model_format(const std::string& path) {
    const json j = load_json(path);
    if (!j.contains("format")) throw std::runtime_error(path + ": missing format tag");
    return j["format"].get<std::string>();
}

}  // namespace kooplift
