"""
Tests for the result table adapters
"""
import os
import shutil
import sys
import tempfile
import unittest
from unittest import mock

import numpy as np
import pandas as pd

# Add src directory to path so imports work
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, os.path.join(parent_dir, 'src'))

from output_adapter import (LocalOutputAdapter, MemoryOutputAdapter, complex_columns,
                            create_output_adapter)


class TestLocalOutputAdapter(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_full_precision_csv(self):
        adapter = LocalOutputAdapter(os.path.join(self.temp_dir, 'nested', 'out'))
        location = adapter.write_table('u.csv', pd.DataFrame({'x': [1.0 / 3.0], 'u_re': [2.0]}))
        with open(location) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], 'x,u_re')
        self.assertEqual(lines[1], '0.33333333333333331,2')
        self.assertEqual(adapter.written(), ['u.csv'])

    def test_values_survive_reading_back(self):
        adapter = LocalOutputAdapter(self.temp_dir)
        values = np.random.default_rng(3).random(20)
        adapter.write_table('t.csv', pd.DataFrame({'v': values}))
        loaded = pd.read_csv(os.path.join(self.temp_dir, 't.csv'), float_precision='round_trip')
        np.testing.assert_array_equal(loaded['v'].to_numpy(), values)


class TestMemoryOutputAdapter(unittest.TestCase):
    def test_tables_are_copied(self):
        adapter = MemoryOutputAdapter()
        frame = pd.DataFrame({'a': [1, 2]})
        self.assertEqual(adapter.write_table('a.csv', frame), 'memory://a.csv')
        frame.loc[0, 'a'] = 99
        self.assertEqual(adapter.tables['a.csv']['a'].tolist(), [1, 2])
        self.assertEqual(adapter.written(), ['a.csv'])


class TestFactory(unittest.TestCase):
    def test_explicit_types(self):
        temp_dir = tempfile.mkdtemp()
        try:
            self.assertIsInstance(create_output_adapter('local', output_dir=temp_dir), LocalOutputAdapter)
        finally:
            shutil.rmtree(temp_dir)
        self.assertIsInstance(create_output_adapter('memory'), MemoryOutputAdapter)

    def test_environment_default(self):
        with mock.patch.dict(os.environ, {'QUASIHELM_OUTPUT': 'memory'}):
            self.assertIsInstance(create_output_adapter(), MemoryOutputAdapter)

    def test_unknown_type(self):
        with self.assertRaises(ValueError):
            create_output_adapter('s3')


class TestComplexColumns(unittest.TestCase):
    def test_split(self):
        columns = complex_columns('lambda_plus', [1 - 2j])
        self.assertEqual(list(columns), ['lambda_plus_re', 'lambda_plus_im'])
        self.assertEqual(columns['lambda_plus_re'][0], 1.0)
        self.assertEqual(columns['lambda_plus_im'][0], -2.0)


if __name__ == '__main__':
    unittest.main()
