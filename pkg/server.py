import os
from web import app
from logger import info_logger, error_logger


if __name__ == '__main__':
    info_logger.info("Server Running")
    app.run(debug=os.environ.get('FLASK_DEBUG') == '1')
