#ifndef SXADMM_DECOMPOSITION_HPP_
#define SXADMM_DECOMPOSITION_HPP_

#include <Eigen/SVD>

#include "sxadmm/types.hpp"

namespace sxadmm {

/// Internal/external split of (A, B) under a partition, together with the
/// reduced virtual-input bases W_i.
///
/// W_i has orthonormal columns spanning the range of the row block
/// [Aext_i, Bext_i]; its column count w_i is the numerical rank of that
/// block. out1 is set when every subsystem feeds at most one other
/// subsystem, which lets the coupling projection split further.
struct Decomposition {
    Matrix Aint, Aext, Bint, Bext;
    std::vector<Matrix> W;      // M entries, x_i by w_i
    std::vector<Index> wdims;   // numerical ranks
    bool out1 = false;

    Index total_w() const {
        Index n = 0;
        for (Index d : wdims) n += d;
        return n;
    }

    Matrix A_block(const Partition& p, Index i, Index j) const {
        return Aint.block(p.x_offset(i), p.x_offset(j), p.xdims[i], p.xdims[j]) +
               Aext.block(p.x_offset(i), p.x_offset(j), p.xdims[i], p.xdims[j]);
    }
    Matrix B_block(const Partition& p, Index i, Index j) const {
        return Bint.block(p.x_offset(i), p.u_offset(j), p.xdims[i], p.udims[j]) +
               Bext.block(p.x_offset(i), p.u_offset(j), p.xdims[i], p.udims[j]);
    }
};

inline Decomposition decompose(const LtiSystem& sys, const Partition& partition,
                               double rank_tol = 1e-10) {
    sys.validate();
    partition.validate_for(sys);

    const Index M = partition.blocks();
    Decomposition dec;
    dec.Aint = Matrix::Zero(sys.state_dim(), sys.state_dim());
    dec.Bint = Matrix::Zero(sys.state_dim(), sys.input_dim());
    for (Index i = 0; i < M; ++i) {
        const Index xo = partition.x_offset(i);
        const Index uo = partition.u_offset(i);
        dec.Aint.block(xo, xo, partition.xdims[i], partition.xdims[i]) =
            sys.A.block(xo, xo, partition.xdims[i], partition.xdims[i]);
        if (partition.udims[i] > 0)
            dec.Bint.block(xo, uo, partition.xdims[i], partition.udims[i]) =
                sys.B.block(xo, uo, partition.xdims[i], partition.udims[i]);
    }
    dec.Aext = sys.A - dec.Aint;
    dec.Bext = sys.B - dec.Bint;

    // Range basis of the concatenated off-diagonal row block per subsystem.
    // The zero columns belonging to block i do not change the range, so the
    // full Aext/Bext row block is factorized directly.
    for (Index i = 0; i < M; ++i) {
        const Index xo = partition.x_offset(i);
        const Index xi = partition.xdims[i];
        Matrix ext(xi, sys.state_dim() + sys.input_dim());
        ext << dec.Aext.middleRows(xo, xi), dec.Bext.middleRows(xo, xi);

        if (ext.cwiseAbs().maxCoeff() == 0.0) {
            dec.W.emplace_back(xi, 0);
            dec.wdims.push_back(0);
            continue;
        }
        Eigen::JacobiSVD<Matrix> svd(ext, Eigen::ComputeThinU);
        const double smax = svd.singularValues()(0);
        Index rank = 0;
        for (Index k = 0; k < svd.singularValues().size(); ++k)
            if (svd.singularValues()(k) > rank_tol * smax) ++rank;
        dec.W.push_back(svd.matrixU().leftCols(rank));
        dec.wdims.push_back(rank);
    }

    // out-1: each source block appears in at most one external row block.
    dec.out1 = true;
    for (Index j = 0; j < M && dec.out1; ++j) {
        Index destinations = 0;
        for (Index i = 0; i < M; ++i) {
            if (i == j) continue;
            const bool a_hit = dec.Aext
                                   .block(partition.x_offset(i), partition.x_offset(j),
                                          partition.xdims[i], partition.xdims[j])
                                   .cwiseAbs()
                                   .maxCoeff() != 0.0;
            const bool b_hit = partition.udims[j] > 0 &&
                               dec.Bext
                                       .block(partition.x_offset(i), partition.u_offset(j),
                                              partition.xdims[i], partition.udims[j])
                                       .cwiseAbs()
                                       .maxCoeff() != 0.0;
            if (a_hit || b_hit) ++destinations;
        }
        if (destinations > 1) dec.out1 = false;
    }
    return dec;
}

}  // namespace sxadmm

#endif  // SXADMM_DECOMPOSITION_HPP_
