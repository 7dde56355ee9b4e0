#include "skelfac/dense.hpp"

namespace skelfac {

// Explicit instantiations for the supported scalar types.
template IdResultT<double> interp_decomp(const Eigen::MatrixXd&, double);
template IdResultT<std::complex<double>> interp_decomp(const Eigen::MatrixXcd&, double);
template double id_residual(const Eigen::MatrixXd&, const IdResultT<double>&);
template double id_residual(const Eigen::MatrixXcd&, const IdResultT<std::complex<double>>&);
template class PivotFactorT<double>;
template class PivotFactorT<std::complex<double>>;
template BlockEliminationT<double> block_eliminate(const PivotFactorT<double>&,
                                                   const Eigen::MatrixXd&,
                                                   const Eigen::MatrixXd&,
                                                   const Eigen::MatrixXd&);
template BlockEliminationT<std::complex<double>> block_eliminate(
    const PivotFactorT<std::complex<double>>&, const Eigen::MatrixXcd&,
    const Eigen::MatrixXcd&, const Eigen::MatrixXcd&);

}  // namespace skelfac
