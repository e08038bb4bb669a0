#pragma once

#include "compactnet/activations.hpp"
#include "compactnet/analysis.hpp"
#include "compactnet/cnn.hpp"
#include "compactnet/constraints.hpp"
#include "compactnet/errors.hpp"
#include "compactnet/experiments.hpp"
#include "compactnet/linalg.hpp"
#include "compactnet/model.hpp"
#include "compactnet/pgd.hpp"
#include "compactnet/quadrature.hpp"
#include "compactnet/randact.hpp"
#include "compactnet/rng.hpp"
