# -*- coding: utf-8 -*-
#
# pathcaps documentation build configuration file.

import sys, os

sys.path.append(os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.todo', 'sphinx.ext.coverage']

templates_path = ['_templates']
source_suffix = '.rst'
source_encoding = 'utf-8'
master_doc = 'index'

project = u'pathcaps'
copyright = u'2026, pathcaps developers'

version = '0.1'
release = '0.1.0'

exclude_trees = ['_build']
pygments_style = 'default'

html_theme = 'sphinxdoc'
html_static_path = ['_static']
htmlhelp_basename = 'pathcapsdoc'

latex_documents = [
  ('index', 'pathcaps.tex', u'pathcaps Documentation',
   u'pathcaps developers', 'manual'),
]
