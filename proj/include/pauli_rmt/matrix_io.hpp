#pragma once

#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "pauli_rmt/common.hpp"

namespace pauli_rmt {

// Text format for complex matrices tied to a qubit register:
//
//   pauli-rmt-matrix-v1
//   qubits <N>
//   dim <D>
//   <re> <im>          (D*D lines, row-major, printf %.17g)
//
// %.17g round-trips IEEE doubles exactly, so save followed by load is
// lossless.
inline void save_matrix(const std::string& path, const Eigen::MatrixXcd& m,
                        int n_qubits) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("save_matrix: matrix is not square");
  }
  std::ofstream out(path);
  if (!out) throw io_error(path, "cannot open for writing");
  out << "pauli-rmt-matrix-v1\n";
  out << "qubits " << n_qubits << "\n";
  out << "dim " << m.rows() << "\n";
  char line[80];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(line, sizeof line, "%.17g %.17g\n", m(r, c).real(),
                    m(r, c).imag());
      out << line;
    }
  }
  if (!out.flush()) throw io_error(path, "write failed");
}

struct LoadedMatrix {
  int n_qubits = 0;
  Eigen::MatrixXcd matrix;
};

inline LoadedMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path, "cannot open for reading");
  std::string magic;
  if (!std::getline(in, magic) || magic != "pauli-rmt-matrix-v1") {
    throw io_error(path, "missing pauli-rmt-matrix-v1 header");
  }
  std::string key;
  LoadedMatrix out;
  Eigen::Index dim = 0;
  if (!(in >> key >> out.n_qubits) || key != "qubits" || out.n_qubits < 1) {
    throw io_error(path, "malformed qubits line");
  }
  if (!(in >> key >> dim) || key != "dim" || dim < 1) {
    throw io_error(path, "malformed dim line");
  }
  out.matrix.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) {
        throw io_error(path, "truncated entry list at row " +
                                 std::to_string(r) + ", column " +
                                 std::to_string(c));
      }
      out.matrix(r, c) = {re, im};
    }
  }
  return out;
}

}  // namespace pauli_rmt
