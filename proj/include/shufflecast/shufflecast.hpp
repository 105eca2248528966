#pragma once

#include "shufflecast/controlplane.hpp"
#include "shufflecast/costmodel.hpp"
#include "shufflecast/error.hpp"
#include "shufflecast/faultanalysis.hpp"
#include "shufflecast/flowsim.hpp"
#include "shufflecast/io.hpp"
#include "shufflecast/parallel.hpp"
#include "shufflecast/routing.hpp"
#include "shufflecast/topology.hpp"
