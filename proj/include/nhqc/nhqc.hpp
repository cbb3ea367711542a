#pragma once

#include "nhqc/bessel.hpp"
#include "nhqc/device.hpp"
#include "nhqc/dynamics.hpp"
#include "nhqc/experiments.hpp"
#include "nhqc/hilbert.hpp"
#include "nhqc/holonomy.hpp"
#include "nhqc/linalg.hpp"
#include "nhqc/metrics.hpp"
#include "nhqc/model.hpp"
#include "nhqc/serialization.hpp"
