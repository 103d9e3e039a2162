#pragma once

#include "cubeletworld/baselines.hpp"
#include "cubeletworld/boids.hpp"
#include "cubeletworld/config.hpp"
#include "cubeletworld/dataset_io.hpp"
#include "cubeletworld/discretizer.hpp"
#include "cubeletworld/error.hpp"
#include "cubeletworld/evaluator.hpp"
#include "cubeletworld/graph.hpp"
#include "cubeletworld/graph_io.hpp"
#include "cubeletworld/io.hpp"
#include "cubeletworld/pipeline.hpp"
#include "cubeletworld/rng.hpp"
#include "cubeletworld/terrain.hpp"
#include "cubeletworld/vec3.hpp"
#include "cubeletworld/world.hpp"
