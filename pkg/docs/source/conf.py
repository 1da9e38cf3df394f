# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys

sys.path.insert(0, os.path.abspath("../.."))

from perc_ldp.info import __version__  # noqa: E402

project = "perc_ldp"
copyright = "2024, The perc_ldp Developers & Contributors"
author = "The perc_ldp Developers & Contributors"
release = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinxarg.ext",
    "sphinx.ext.autosectionlabel",
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "myst_parser",
]

# Napoleon settings
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = False
napoleon_include_private_with_doc = False
napoleon_use_ivar = True
napoleon_use_param = True
napoleon_use_rtype = True
napoleon_attr_annotations = True

templates_path = ["_templates"]

source_suffix = {
    ".rst": "restructuredtext",
    ".md": "markdown",
}
source_encoding = "utf-8-sig"
master_doc = "index"

exclude_patterns = ["_build", "_build/doctrees"]
default_role = "obj"
pygments_style = "sphinx"

# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
html_title = project
html_short_title = "perc_ldp"
html_static_path = []
html_last_updated_fmt = "%b %d, %Y"
html_domain_indices = False
html_show_sourcelink = False
htmlhelp_basename = "perc_ldpdoc"

autosectionlabel_prefix_document = True

man_pages = [
    (
        "index",
        "perc_ldp",
        "perc_ldp",
        ["The perc_ldp Developers & Contributors"],
        1,
    )
]
