"""
Main experiment runner
Resolves the run configuration, drives the half-line, whole-line and study pipelines
and writes the result tables
"""
import os
import sys
import math
import time
import logging
import threading
from typing import List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from broken_line import detect_segments, min_pairwise_distance
from errors import ConfigError, QuasiHelmError
from halfguide import solve_halfline
from media import sample_broken_line
from oracles import (StudyContext, TruncationPolicy, absorption_study, convergence_study,
                     reference_spectral_radius, spectrum_study)
from output_adapter import OutputAdapter, complex_columns, create_output_adapter
from run_config import COMMANDS, RunConfig, default_workers, load_config, parse_overrides
from wholeline import flux_jump, solve_whole_line


# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ExperimentRunner:
    def __init__(self, config: RunConfig, output: OutputAdapter, max_workers: Optional[int] = None):
        """
        Initialize experiment runner

        Args:
            config: Resolved run configuration
            output: OutputAdapter receiving the result tables
            max_workers: Thread pool size (defaults to QUASIHELM_WORKERS)
        """
        self.config = config
        self.output = output
        self.max_workers = max_workers if max_workers is not None else default_workers()

        self.stats_lock = threading.Lock()
        self.stats = {
            'pipelines': 0,
            'references': 0,
            'tables': 0,
            'errors': 0,
        }
        self.started = None

    def run(self):
        """Run the configured experiment and write its tables"""
        self.started = time.time()
        handler = getattr(self, f"run_{self.config.command}")
        try:
            handler()
        finally:
            self.print_summary()

    def _write(self, name: str, frame: pd.DataFrame):
        self.output.write_table(name, frame)
        with self.stats_lock:
            self.stats['tables'] += 1

    def _count(self, key: str, amount: int = 1):
        with self.stats_lock:
            self.stats[key] += amount

    def _grid(self, default_window) -> np.ndarray:
        lo, hi = self.config.window if self.config.window is not None else default_window
        return np.linspace(lo, hi, self.config.n_points)

    def _cells_to_reach(self, distance: float, theta) -> int:
        """Cell count covering (0, distance) along the cut, never below the configured l_cells"""
        needed = math.ceil(distance * theta.theta2 - 1e-12)
        if needed > self.config.l_cells:
            logger.info(f"Window reaches {distance:.4g}: reconstructing {needed} cells instead of {self.config.l_cells}")
        return max(self.config.l_cells, needed)

    def _context(self) -> StudyContext:
        config = self.config
        mu_p, rho_p = config.coefficients()
        return StudyContext(mu_p=mu_p, rho_p=rho_p, theta=config.cut_vector(), h_theta=config.h_theta,
                            order=config.order, l_cells=config.l_cells, boundary=config.boundary_data,
                            fresh_cells=config.fresh_cells, policy=TruncationPolicy(config.target),
                            h_ref=config.h_ref, max_workers=self.max_workers)

    def _merge_context_stats(self, context: StudyContext):
        for key in ('pipelines', 'references', 'errors'):
            self._count(key, context.stats[key])

    def run_halfline(self):
        config = self.config
        mu_p, rho_p = config.coefficients()
        theta = config.cut_vector()
        l_cells = self._cells_to_reach(config.window[1] if config.window is not None else 0.0, theta)
        result = solve_halfline(mu_p, rho_p, theta, config.omega, config.method, config.h,
                                h_theta=config.h_theta, order=config.order, l_cells=l_cells,
                                boundary=config.boundary_data, fresh_cells=config.fresh_cells,
                                max_workers=self.max_workers)
        self._count('pipelines')

        x = self._grid((0.0, result.solution.x_max))
        u = result.solution.evaluate(x)
        self._write('u.csv', pd.DataFrame({'x': x, **complex_columns('u', u)}))
        self._write('dtn.csv', pd.DataFrame({
            **complex_columns('lambda_plus', [result.lambda_plus]),
            'spectral_radius': [result.spectral_radius],
            'pairing_defect': [result.spectrum.pairing_defect],
            'n_dofs': [result.space.n_dofs],
            'method': [result.method],
            'inv_h': [result.inv_h],
        }))
        lam = result.propagation.eigenvalues
        self._write('eigenvalues.csv', pd.DataFrame({
            're_lambda': lam.real, 'im_lambda': lam.imag, 'abs_lambda': np.abs(lam),
            'method': result.method, 'inv_h': result.inv_h,
        }))
        if config.export_field:
            if result.halfguide is None:
                logger.warning("export_field only applies to the 2d method, skipping field.csv")
            else:
                self._write('field.csv', result.halfguide.field_frame())

    def run_wholeline(self):
        config = self.config
        medium = config.medium()
        far = max(abs(config.window[0]), abs(config.window[1])) - config.a if config.window is not None else 0.0
        l_cells = self._cells_to_reach(far, medium.theta)
        result = solve_whole_line(medium, config.omega, config.method, config.h, h_theta=config.h_theta,
                                  order=config.order, l_cells=l_cells, max_workers=self.max_workers)
        self._count('pipelines', 2)

        jump_plus, jump_minus = flux_jump(result.solution, medium)
        logger.info(f"Flux jumps: {jump_plus:.3e} at a, {jump_minus:.3e} at -a")
        reach = min(6.0, result.solution.reach)
        x = self._grid((-reach, reach))
        self._write('u.csv', result.solution.frame(x))
        self._write('dtn.csv', pd.DataFrame({
            **complex_columns('lambda_plus', [result.plus.lambda_plus]),
            **complex_columns('lambda_minus', [result.minus.lambda_plus]),
            'spectral_radius_plus': [result.plus.spectral_radius],
            'spectral_radius_minus': [result.minus.spectral_radius],
            'method': [config.method],
            'inv_h': [result.plus.inv_h],
        }))

    def run_convergence(self):
        context = self._context()
        try:
            report = convergence_study(context, self.config.method, self.config.omega, self.config.h_list)
        finally:
            self._merge_context_stats(context)
        self._write('convergence.csv', report.to_frame())

    def run_absorption(self):
        context = self._context()
        try:
            frame = absorption_study(context, self.config.method, self.config.omega_re,
                                     self.config.omega_im_list, self.config.h)
        finally:
            self._merge_context_stats(context)
        self._write('absorption.csv', frame)

    def run_spectrum(self):
        config = self.config
        context = self._context()
        try:
            radius_ref = config.radius_ref
            if radius_ref is None:
                radius_ref = reference_spectral_radius(context.mu_p, context.rho_p, context.theta, config.omega,
                                                       config.n_samples, context.policy, config.h_ref,
                                                       self.max_workers)
                self._count('references', config.n_samples)
            eigenvalues, bands = spectrum_study(context, config.methods, config.omega, config.h_list,
                                                radius_ref, config.band)
        finally:
            self._merge_context_stats(context)
        self._write('eigenvalues.csv', eigenvalues)
        self._write('band_counts.csv', bands)

    def run_fibrage(self):
        config = self.config
        theta = config.cut_vector()
        x, points = sample_broken_line(theta, config.fibrage_m, config.fibrage_step)
        segments, runs = detect_segments(x, points, theta)
        logger.info(f"Fibrage: {len(points)} samples, {len(runs)} runs, {len(segments)} segments, "
                    f"closest pair {min_pairwise_distance(points):.3e}")
        self._write('points.csv', pd.DataFrame({'y1': points[:, 0], 'y2': points[:, 1]}))
        self._write('segments.csv', pd.DataFrame({
            'offset': [group.offset for group in segments],
            'n_points': [group.n_points for group in segments],
            'start_x': [group.runs[0].start_x for group in segments],
            'end_x': [group.runs[-1].end_x for group in segments],
        }))

    def print_summary(self):
        """Print run statistics"""
        elapsed = time.time() - self.started if self.started is not None else 0.0
        logger.info("\n" + "=" * 50)
        logger.info("RUN SUMMARY")
        logger.info("=" * 50)
        logger.info(f"Command: {self.config.command}")
        logger.info(f"Half-line pipelines: {self.stats['pipelines']}")
        logger.info(f"Reference solves: {self.stats['references']}")
        logger.info(f"Tables written: {self.stats['tables']}")
        logger.info(f"Errors: {self.stats['errors']}")
        logger.info(f"Elapsed: {elapsed:.1f} s")
        logger.info("=" * 50)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    import argparse

    # Parse command line arguments; unknown --key value pairs override the config file
    parser = argparse.ArgumentParser(description='Quasiperiodic 1D Helmholtz DtN solver', allow_abbrev=False)
    parser.add_argument('command', choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--config', default=None, help='Flat key = value configuration file')
    args, extra = parser.parse_known_args(argv)

    log_level = os.getenv('LOG_LEVEL', 'INFO').upper()
    logging.getLogger().setLevel(getattr(logging, log_level, logging.INFO))

    config = None
    try:
        config = load_config(args.config, parse_overrides(extra), command=args.command)

        logger.info("=" * 50)
        logger.info(f"quasihelm - {config.command}")
        logger.info("=" * 50)
        logger.info(f"Medium: mu={config.mu}, rho={config.rho}, theta={config.cut_vector()}")
        logger.info(f"omega = {config.omega}, method = {config.method}, h = {config.h}")
        logger.info(f"Output directory: {config.output_dir}")
        logger.info("=" * 50 + "\n")

        output = create_output_adapter(output_dir=config.output_dir)
        ExperimentRunner(config, output).run()
        logger.info("Run complete!")
        return EXIT_OK

    except ConfigError as e:
        logger.error(f"Configuration error {e}")
        return EXIT_CONFIG
    except QuasiHelmError as e:
        logger.error(f"Numerical failure in module {e.module}: {e}")
        logger.error(f"Configuration: {config.echo() if config is not None else 'unresolved'}")
        return EXIT_NUMERICAL
    except Exception as e:
        logger.error(f"Fatal error: {str(e)}", exc_info=True)
        return EXIT_UNEXPECTED


if __name__ == '__main__':
    sys.exit(main())
