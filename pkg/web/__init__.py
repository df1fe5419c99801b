from flask import Flask
from dotenv import load_dotenv
import os
from config import Config
from logger import info_logger, error_logger

load_dotenv()
app = Flask(__name__)
app.config['SECRET_KEY'] = os.environ.get('SECRET_KEY', 'dds-latency-dev')
# Read-only JSON API, no sessions to protect
app.config['WTF_CSRF_ENABLED'] = False
app.config['MAX_WEB_MESSAGES'] = Config.MAX_WEB_MESSAGES
app.json.sort_keys = False

from web import urls
info_logger.info('Web API constructed')
