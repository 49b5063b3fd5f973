import io
import logging
import os
import tempfile
import unittest

from omnirate.logger import (
    ConsoleHandler, add_file_handler, remove_file_handler, setup_logging)


class FileHandlerTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.log = logging.getLogger('omnirate.tests.filehandler')
        self.log.propagate = False
        self.console = io.StringIO()
        setup_logging(self.log, stream=self.console)
        self.log.setLevel(logging.WARNING)

    def tearDown(self):
        for handler in list(self.log.handlers):
            self.log.removeHandler(handler)
        self.log.setLevel(logging.NOTSET)
        self.log.propagate = True
        self.tmp.cleanup()

    def test_level_restored(self):
        path = os.path.join(self.tmp.name, 'run.log')
        handler = add_file_handler(self.log, path)
        self.assertEqual(self.log.level, logging.DEBUG)
        self.log.debug('detail')
        remove_file_handler(self.log, handler)
        self.assertEqual(self.log.level, logging.WARNING)
        self.assertNotIn(handler, self.log.handlers)
        with open(path) as f:
            self.assertIn('detail', f.read())

    def test_console_keeps_threshold(self):
        handler = add_file_handler(
            self.log, os.path.join(self.tmp.name, 'run.log'))
        self.log.debug('detail')
        self.log.warning('problem')
        remove_file_handler(self.log, handler)
        self.log.info('later')
        self.assertEqual(self.console.getvalue(), 'WARNING: problem\n')

    def test_unset_level_restored(self):
        self.log.setLevel(logging.NOTSET)
        handler = add_file_handler(
            self.log, os.path.join(self.tmp.name, 'run.log'))
        remove_file_handler(self.log, handler)
        self.assertEqual(self.log.level, logging.NOTSET)

    def test_single_console(self):
        setup_logging(self.log, stream=self.console)
        self.assertEqual(len([h for h in self.log.handlers
                              if isinstance(h, ConsoleHandler)]), 1)
