#pragma once

#include "qdiff/errors.hpp"
#include "qdiff/numerics.hpp"
#include "qdiff/rational.hpp"
#include "qdiff/coefficient.hpp"
#include "qdiff/parser.hpp"
#include "qdiff/solution.hpp"
#include "qdiff/homogeneous.hpp"
#include "qdiff/inhomogeneous.hpp"
#include "qdiff/operators.hpp"
#include "qdiff/verify.hpp"
