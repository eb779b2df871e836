#pragma once

#include "ckpca/bench.hpp"
#include "ckpca/cluster.hpp"
#include "ckpca/detect.hpp"
#include "ckpca/dimsel.hpp"
#include "ckpca/errors.hpp"
#include "ckpca/io.hpp"
#include "ckpca/kernels.hpp"
#include "ckpca/operators.hpp"
#include "ckpca/reduction.hpp"
#include "ckpca/simdata.hpp"
