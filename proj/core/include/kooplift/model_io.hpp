#pragma once

#include <string>

#include "kooplift/koopman.hpp"
#include "kooplift/teacher.hpp"

namespace kooplift {

/// Versioned JSON model files. Doubles round-trip bit-exactly (shortest
/// representation that parses back to the same value).

void save_teacher(const TeacherMlp& mlp, const std::string& path);
TeacherMlp load_teacher(const std::string& path);

void save_student(const LinearStudent& student, const std::string& path);
LinearStudent load_student(const std::string& path);

void write_logits(const LogitsFile& file, const std::string& path);
LogitsFile import_logits(const std::string& path);

void export_logits(const TeacherMlp& mlp, const DenseMatrix& x, const std::string& path,
                   const std::string& provenance);

/// "kooplift-teacher" | "kooplift-student" | "kooplift-logits"
std::string peek_model_format(const std::string& path);

}  // namespace kooplift
